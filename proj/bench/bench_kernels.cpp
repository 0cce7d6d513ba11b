// Timing of the parallel kernels against their serial references.
//
//   poolsim_bench [box_side] [steps] [exact_horizon]
//
// Each pair is also checked for identical output.

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "poolsim/box_engine.hpp"
#include "poolsim/exact_engine.hpp"

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same(const poolsim::Trajectory& a, const poolsim::Trajectory& b) {
  return a.events == b.events;
}

}  // namespace

int main(int argc, char** argv) {
  const double side = argc > 1 ? std::atof(argv[1]) : 200.0;
  const double steps = argc > 2 ? std::atof(argv[2]) : 200.0;
  const double horizon = argc > 3 ? std::atof(argv[3]) : 50.0;

  poolsim::BoxConfig box;
  box.lambda = 1.0;
  box.box_side = side;
  box.dt = 0.01;
  box.horizon = steps * box.dt;
  box.kinematics = poolsim::Kinematics::brownian;
  box.master_seed = 7;

  poolsim::Trajectory serial, parallel;
  const double ts = seconds([&] { serial = poolsim::run_box(box, false); });
  const double tp = seconds([&] { parallel = poolsim::run_box(box, true); });
  std::cout << "brownian box L=" << side << " steps=" << box.step_count() << "\n"
            << "  serial   " << ts << " s\n"
            << "  openmp   " << tp << " s  speedup " << ts / tp
            << (same(serial, parallel) ? "  (identical)" : "  (MISMATCH)") << "\n";

  poolsim::ExactConfig ex;
  ex.lambda = 0.5;
  ex.horizon = horizon;
  ex.master_seed = 7;
  ex.sim_radius = poolsim::sim_radius_for_bound(ex, 1e-3);
  poolsim::Trajectory heap, uni;
  ex.scheduler = poolsim::Scheduler::heap;
  const double th = seconds([&] { heap = poolsim::run_exact(ex); });
  ex.scheduler = poolsim::Scheduler::uniformized;
  const double tu = seconds([&] { uni = poolsim::run_exact(ex); });
  std::cout << "exact engine lambda=0.5 horizon=" << horizon << " R=" << ex.sim_radius << "\n"
            << "  heap         " << th << " s  events " << heap.info.events_processed << "\n"
            << "  uniformized  " << tu << " s  events " << uni.info.events_processed << "\n";
  return same(serial, parallel) ? 0 : 1;
}
