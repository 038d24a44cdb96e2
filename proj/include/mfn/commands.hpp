#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfn/engine.hpp"
#include "mfn/io.hpp"
#include "mfn/network.hpp"

namespace mfn {

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNonConverged = 3;
inline constexpr int kExitIo = 4;

struct Metrics {
  double mse = 0.0;
  double l1_total = 0.0;
  double l1_per_pixel_channel = 0.0;
  bool perfect_restore = false;
  double accuracy = -1.0;  // < 0: not a classification run
  std::uint64_t iterations = 0;
  std::uint64_t opinion_updates = 0;
  std::uint64_t votes_cast = 0;
  std::uint64_t rollbacks = 0;
  bool converged = true;
};

void write_metrics_csv(const Metrics& m, const std::string& path);

/// Parse "serial" or "simul:<fraction>" plus the shared schedule knobs.
Schedule schedule_from(const RunConfig& config, int threads, bool trace);

/// Worker-thread count: explicit jobs flag, else the MFN_THREADS
/// environment cap, else 1.
int resolve_threads(int jobs_flag);

struct GenOptions {
  std::string kind;  // faces | textures | digits | music
  std::string out_dir;
  std::size_t count = 10;
  std::size_t width = 16, height = 16;
  double seconds = 2.0;
  double sample_rate = 8000.0;
  std::uint64_t seed = 1;
};

/// Writes a seeded synthetic dataset; digits get labels in their filenames.
void cmd_gen(const GenOptions& opt);

struct TrainReport {
  std::size_t payloads = 0;
  std::size_t training_items = 0;
  std::string model_dir;
};

/// Trains one payload per payload key of the configured layout and writes
/// the model directory (manifest + payload files + residual diagnostics).
TrainReport cmd_train(const RunConfig& config, const std::string& data_dir);

struct InferOptions {
  std::string input_path;
  std::optional<std::string> mask_path;  // image tasks: 0 bytes mark missing
  std::optional<std::string> original_path;
  std::string output_path;
  std::optional<std::string> trace_path;
  std::optional<std::pair<std::size_t, std::size_t>> erase_frames;
  bool two_pass = false;     // spectrogram denoise protocol
  bool match_gray = false;   // colorization post-processing
  int jobs = 0;
};

struct InferReport {
  Metrics metrics;
  bool any_evidence = true;
  std::size_t unknown_variables = 0;
};

InferReport cmd_infer(const RunConfig& config, const InferOptions& opt);

struct ClassifyReport {
  Metrics metrics;  // accuracy filled when labels are known
  double mean_iterations = 0.0;
  double mean_opinion_updates = 0.0;
  std::vector<std::pair<std::string, int>> predictions;
};

ClassifyReport cmd_classify(const RunConfig& config,
                            const std::string& digits_dir,
                            const std::string& out_csv, int jobs);

struct BenchmarkOptions {
  std::size_t n_trials = 50;
  double noise_sigma = 40.0;
  std::size_t blob_pixels = 36;
  std::uint64_t seed = 7;
  std::string out_dir;
  int jobs = 0;
};

struct BenchmarkReport {
  Metrics mean;            // averaged over trials
  double fraction_perfect = 0.0;
  double fraction_l1_ok = 0.0;  // per-pixel-per-channel L1 <= 1.0
  double rollback_rate = 0.0;
  std::size_t trials = 0;
};

/// Corrupt stored images (noise + erased center blob), restore them with
/// the trained table model, and aggregate restoration quality.
BenchmarkReport cmd_benchmark_restore(const RunConfig& config,
                                      const std::string& data_dir,
                                      const BenchmarkOptions& opt);

/// Pixel metrics between two images of equal shape.
Metrics cmd_eval(const std::string& original_path,
                 const std::string& reconstruction_path);

}  // namespace mfn
