#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sarforge/dataset.hpp"
#include "sarforge/emfield.hpp"
#include "sarforge/phantom.hpp"
#include "sarforge/sar.hpp"

namespace sarforge {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SARFORGE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct GenerateConfig {
  FieldTag field = FieldTag::k3T;
  int grid_n = 64;
  int positions_x = 8;
  int positions_y = 8;
  int phantom_seeds = 8;
  std::uint64_t base_seed = 1;
  AxisRange range_x{-0.03, 0.03};
  AxisRange range_y{-0.03, 0.03};
  double target_mass = kGram;
  SolveOptions solver;
  int threads = 0;  // 0: SARFORGE_THREADS or hardware concurrency
  std::map<std::string, std::string> phantom_overrides;
  std::map<std::string, std::string> tissue_overrides;
};

// geometry derived from the config: one coil, one phantom family, the
// placement sweep, and the shared unloaded-B1 map
struct GeneratePlan {
  CoilModel coil;
  PhantomSpec spec;
  std::vector<Placement> placements;
  Grid2D<double> b1;
  double cell_size = 0.0;
};

inline GeneratePlan make_plan(const GenerateConfig& cfg) {
  if (cfg.phantom_seeds < 1) throw SpecError("generate: need at least one phantom seed");
  if (cfg.grid_n < 16) throw SpecError("generate: grid too small");
  GeneratePlan plan;
  plan.coil = make_coil(cfg.field);
  plan.cell_size = 2.0 * plan.coil.shield_radius / (cfg.grid_n - 4);
  plan.spec = default_phantom_spec(cfg.grid_n, plan.cell_size);
  if (!cfg.phantom_overrides.empty())
    plan.spec = phantom_spec_from_config(plan.spec, cfg.phantom_overrides);
  plan.placements = enumerate_placements(plan.spec, plan.coil, cfg.range_x, cfg.range_y,
                                         cfg.positions_x, cfg.positions_y);
  plan.b1 = unloaded_b1(plan.coil, cfg.grid_n, cfg.grid_n, plan.cell_size);
  return plan;
}

struct GenStats {
  int placements = 0;
  int attempted = 0;
  int built = 0;
  int rejected_zero_target = 0;
  int rejected_zero_input = 0;
  long long solver_iterations = 0;
  double worst_residual = 0.0;
  std::vector<SarSummary> summaries;  // aligned with the built samples
};

struct GeneratedDataset {
  Dataset dataset;
  GenStats stats;
};

// Sweep phantoms x placements, solve each, and assemble samples. Slots are
// indexed by (seed, placement) so the output order is deterministic no
// matter how the worker threads interleave.
inline GeneratedDataset generate_dataset(const GenerateConfig& cfg) {
  const GeneratePlan plan = make_plan(cfg);

  std::vector<TissueGrid> phantoms;
  phantoms.reserve(static_cast<std::size_t>(cfg.phantom_seeds));
  for (int s = 0; s < cfg.phantom_seeds; ++s) {
    TissueGrid ph = make_phantom(cfg.base_seed + static_cast<std::uint64_t>(s), plan.spec, cfg.field);
    if (!cfg.tissue_overrides.empty())
      apply_tissue_overrides(ph.property_table, cfg.tissue_overrides);
    phantoms.push_back(std::move(ph));
  }

  struct Slot {
    std::optional<Sample> sample;
    SampleReject reject = SampleReject::kNone;
    SarSummary summary;
    SolveStats stats;
  };
  const std::size_t n_jobs = phantoms.size() * plan.placements.size();
  std::vector<Slot> slots(n_jobs);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_jobs) break;
      try {
        const std::size_t si = i / plan.placements.size();
        const std::size_t pi = i % plan.placements.size();
        const TissueGrid& phantom = phantoms[si];
        const Placement& placement = plan.placements[pi];

        Slot& slot = slots[i];
        const FieldComputation fc =
            compute_field(phantom, plan.coil, placement, cfg.solver, &plan.b1);
        slot.stats = fc.stats;
        const SarMap sar = build_sar_map(fc.solution.e_field, fc.placed, cfg.target_mass);
        BuiltSample built = build_sample(fc.placed, placement, fc.solution, sar,
                                         cfg.base_seed + static_cast<std::uint64_t>(si));
        slot.reject = built.reject;
        if (built.sample) {
          slot.sample = std::move(built.sample);
          slot.summary = summarize(sar);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  const int n_threads = std::min<int>(resolve_threads(cfg.threads), static_cast<int>(n_jobs));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  GeneratedDataset out;
  out.dataset.height = cfg.grid_n;
  out.dataset.width = cfg.grid_n;
  out.stats.placements = static_cast<int>(plan.placements.size());
  out.stats.attempted = static_cast<int>(n_jobs);
  for (auto& slot : slots) {
    out.stats.solver_iterations += slot.stats.iterations;
    out.stats.worst_residual = std::max(out.stats.worst_residual, slot.stats.relative_residual);
    if (slot.sample) {
      out.dataset.samples.push_back(std::move(*slot.sample));
      out.stats.summaries.push_back(slot.summary);
      ++out.stats.built;
    } else if (slot.reject == SampleReject::kZeroTarget) {
      ++out.stats.rejected_zero_target;
    } else if (slot.reject == SampleReject::kZeroInput) {
      ++out.stats.rejected_zero_input;
    }
  }
  return out;
}

}  // namespace sarforge
