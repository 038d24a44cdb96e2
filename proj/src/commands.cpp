#include "mfn/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mfn/layouts.hpp"
#include "mfn/rng.hpp"
#include "mfn/signal.hpp"
#include "mfn/synthetic.hpp"
#include "mfn/training.hpp"

namespace fs = std::filesystem;

namespace mfn {

namespace {

std::vector<std::string> sorted_files(const std::string& dir,
                                      std::initializer_list<const char*> exts) {
  if (!fs::is_directory(dir)) throw IoError("no such directory: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    for (const char* e : exts)
      if (ext == e) out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no training files found in " + dir);
  return out;
}

std::string payload_path(const std::string& dir, std::size_t key, bool table) {
  return dir + "/payload_" + std::to_string(key) + (table ? ".tbl" : ".sub");
}

SubspaceConfig subspace_config_from(const RunConfig& c, std::size_t n) {
  SubspaceConfig cfg;
  cfg.lambda = c.lambda;
  cfg.alpha = c.alpha < 0.0 ? default_alpha(n) : c.alpha;
  return cfg;
}

ImageLayoutSpec image_spec_from(const RunConfig& c) {
  ImageLayoutSpec spec;
  spec.width = c.width;
  spec.height = c.height;
  spec.patch = c.patch;
  spec.stride = c.stride;
  spec.linked_patch = c.linked_patch;
  if (c.channels == "mono") spec.channels = ChannelMode::Mono;
  else if (c.channels == "rgb") spec.channels = ChannelMode::Rgb;
  else if (c.channels == "rgb+gray") spec.channels = ChannelMode::RgbGray;
  else throw ValidationError("unknown channel mode: " + c.channels);
  spec.region = c.region;
  return spec;
}

ImageLayout image_layout_from(const RunConfig& c) {
  ImageLayoutSpec spec = image_spec_from(c);
  if (c.layout == "image") return build_image_layout(spec);
  if (c.layout == "combined") return build_combined_color_layout(spec);
  throw ValidationError("not an image layout: " + c.layout);
}

/// Column kinds of one layout factor.
std::vector<VarKind> factor_kinds(const Skeleton& s, const LayoutFactor& f) {
  std::vector<VarKind> kinds;
  kinds.reserve(f.neighbors.size());
  for (VarId v : f.neighbors) kinds.push_back(s.variables[v].kind);
  return kinds;
}

// ---------------------------------------------------------------------------
// Model directory: manifest.json (the training config) + payload files.

void save_payloads(const std::string& dir,
                   const std::vector<PayloadPtr>& payloads) {
  for (std::size_t k = 0; k < payloads.size(); ++k) {
    if (const auto* t =
            std::get_if<std::shared_ptr<const MemoryTable>>(&payloads[k]))
      save_table(**t, payload_path(dir, k, true));
    else
      save_subspace(*std::get<std::shared_ptr<const SubspaceFactor>>(
                        payloads[k]),
                    payload_path(dir, k, false));
  }
}

struct Model {
  RunConfig config;
  std::vector<PayloadPtr> payloads;
};

Model load_model(const std::string& dir) {
  Model m;
  m.config = load_config(dir + "/manifest.json");
  for (std::size_t k = 0;; ++k) {
    std::string tbl = payload_path(dir, k, true);
    std::string sub = payload_path(dir, k, false);
    if (fs::exists(tbl))
      m.payloads.emplace_back(std::make_shared<const MemoryTable>(
          load_table(tbl)));
    else if (fs::exists(sub))
      m.payloads.emplace_back(std::make_shared<const SubspaceFactor>(
          load_subspace(sub)));
    else
      break;
  }
  if (m.payloads.empty()) throw IoError("model directory has no payloads: " + dir);
  return m;
}

// ---------------------------------------------------------------------------
// Network assembly from a skeleton plus payloads and evidence.

struct EvidenceItem {
  VarId var;
  Value value;
  double weight;
};

Network assemble(const Skeleton& skeleton,
                 const std::vector<PayloadPtr>& payloads,
                 const std::vector<double>& factor_edge_weight_by_kind,
                 const std::vector<EvidenceItem>& evidence) {
  NetworkBuilder b;
  for (const auto& spec : skeleton.variables) b.add_variable(spec);
  for (const auto& f : skeleton.factors) {
    if (f.payload_key >= payloads.size())
      throw ValidationError("model payloads do not cover the layout");
    std::vector<double> weights;
    weights.reserve(f.neighbors.size());
    for (VarId v : f.neighbors)
      weights.push_back(factor_edge_weight_by_kind[static_cast<std::size_t>(
          skeleton.variables[v].kind)]);
    b.add_memory_factor(payloads[f.payload_key], f.neighbors,
                        std::move(weights));
  }
  for (const auto& e : evidence) b.add_evidence(e.var, e.value, e.weight);
  return std::move(b).build();
}

std::vector<double> flat_weights(double w) {
  return {w, w, w, w};  // indexed by VarKind
}

/// Hierarchy edge weights: pixels scale the base weight, labels carry the
/// fixed 32x ratio.
std::vector<double> hierarchy_weights(double base) {
  std::vector<double> w = flat_weights(base);
  w[static_cast<std::size_t>(VarKind::Label)] = 32.0 * base;
  return w;
}

// ---------------------------------------------------------------------------

int digit_label_from_name(const std::string& path) {
  // digit_<index>_<label>.pgm; label -1 marks unlabeled inputs.
  std::string stem = fs::path(path).stem().string();
  auto pos = stem.rfind('_');
  if (pos == std::string::npos) return -1;
  int label = -1;
  auto* begin = stem.data() + pos + 1;
  auto [p, ec] = std::from_chars(begin, stem.data() + stem.size(), label);
  if (ec != std::errc{} || p != stem.data() + stem.size()) return -1;
  return (label >= 0 && label <= 9) ? label : -1;
}

}  // namespace

void write_metrics_csv(const Metrics& m, const std::string& path) {
  Matrix row = {{m.mse, m.l1_total, m.l1_per_pixel_channel,
                 m.perfect_restore ? 1.0 : 0.0, m.accuracy,
                 static_cast<double>(m.iterations),
                 static_cast<double>(m.opinion_updates),
                 static_cast<double>(m.votes_cast),
                 static_cast<double>(m.rollbacks), m.converged ? 1.0 : 0.0}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "mse,l1_total,l1_per_pixel_channel,perfect,accuracy,iterations,"
         "opinion_updates,votes_cast,rollbacks,converged\n";
  out.close();
  // Append the numeric row with full round-trip precision.
  std::ofstream app(path, std::ios::app);
  char buf[64];
  for (std::size_t j = 0; j < row[0].size(); ++j) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, row[0][j]);
    if (ec != std::errc{}) throw IoError("format failure");
    app.write(buf, p - buf);
    if (j + 1 < row[0].size()) app << ',';
  }
  app << '\n';
}

Schedule schedule_from(const RunConfig& config, int threads, bool trace) {
  Schedule s;
  if (config.schedule == "serial") {
    s.mode = ScheduleMode::Serial;
  } else if (config.schedule.rfind("simul:", 0) == 0) {
    s.mode = ScheduleMode::Simultaneous;
    std::string frac = config.schedule.substr(6);
    try {
      s.fraction = std::stod(frac);
    } catch (...) {
      throw ValidationError("bad schedule fraction: " + config.schedule);
    }
    if (!(s.fraction > 0.0 && s.fraction <= 1.0))
      throw ValidationError("schedule fraction must lie in (0, 1]");
  } else {
    throw ValidationError("unknown schedule: " + config.schedule);
  }
  s.rollback_enabled = config.rollback;
  s.max_iterations = config.max_iterations;
  s.seed = config.seed;
  s.threads = threads;
  s.record_trace = trace;
  return s;
}

int resolve_threads(int jobs_flag) {
  if (jobs_flag > 0) return jobs_flag;
  if (const char* env = std::getenv("MFN_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

void cmd_gen(const GenOptions& opt) {
  fs::create_directories(opt.out_dir);
  char name[64];
  if (opt.kind == "faces" || opt.kind == "textures") {
    for (std::size_t i = 0; i < opt.count; ++i) {
      ImageBuffer img = opt.kind == "faces"
                            ? synth_face(opt.seed + i, opt.width, opt.height)
                            : synth_texture(opt.seed + i, opt.width, opt.height);
      std::snprintf(name, sizeof name, "%s_%04zu.ppm", opt.kind.c_str(), i);
      write_image(img, opt.out_dir + "/" + name);
    }
  } else if (opt.kind == "digits") {
    for (std::size_t i = 0; i < opt.count; ++i) {
      int label = static_cast<int>(i % 10);
      ImageBuffer img = synth_digit(opt.seed + i, label);
      std::snprintf(name, sizeof name, "digit_%04zu_%d.pgm", i, label);
      write_image(img, opt.out_dir + "/" + name);
    }
  } else if (opt.kind == "music") {
    for (std::size_t i = 0; i < opt.count; ++i) {
      auto samples = synth_music(opt.seed + i, opt.seconds, opt.sample_rate);
      std::snprintf(name, sizeof name, "music_%04zu.wav", i);
      write_wav(opt.out_dir + "/" + name, samples, opt.sample_rate);
    }
  } else {
    throw ValidationError("unknown dataset kind: " + opt.kind);
  }
}

namespace {

TrainReport train_image(const RunConfig& config, const std::string& data_dir) {
  ImageLayout layout = image_layout_from(config);
  auto files = sorted_files(data_dir, {".ppm", ".pgm"});
  std::vector<ImageBuffer> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(read_image(f));

  std::vector<PayloadPtr> payloads(layout.skeleton.payload_count);
  for (std::size_t fi = 0; fi < layout.skeleton.factors.size(); ++fi) {
    const auto& f = layout.skeleton.factors[fi];
    std::vector<std::vector<Value>> rows;
    rows.reserve(images.size());
    for (const auto& img : images) rows.push_back(layout.exemplar_row(fi, img));

    if (config.task == "table") {
      payloads[f.payload_key] = std::make_shared<const MemoryTable>(
          ingest_table(factor_kinds(layout.skeleton, f), rows,
                       config.subsample_prob, config.seed + f.payload_key));
    } else if (config.task == "nmf") {
      Eigen::MatrixXd x(f.neighbors.size(), rows.size());
      for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t i = 0; i < rows[t].size(); ++i)
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
              std::get<double>(rows[t][i]);
      NmfResult r = nmf(x, config.hidden_p, config.nmf_max_iters,
                        config.nmf_tol, config.seed + f.payload_key);
      Matrix trace(1);
      trace[0] = r.objective_trace;
      write_csv_matrix(trace, config.model_dir + "/nmf_trace_" +
                                  std::to_string(f.payload_key) + ".csv");
      payloads[f.payload_key] =
          std::make_shared<const SubspaceFactor>(SubspaceFactor::make(
              r.w, HiddenDomain::NonnegReals,
              subspace_config_from(config, f.neighbors.size())));
    } else {
      throw ValidationError("image layouts train 'table' or 'nmf', not " +
                            config.task);
    }
  }
  save_payloads(config.model_dir, payloads);
  return {payloads.size(), images.size(), config.model_dir};
}

TrainReport train_hierarchy(const RunConfig& config,
                            const std::string& data_dir) {
  if (config.task != "table")
    throw ValidationError("the hierarchy layout trains memory tables only");
  HierarchyLayout layout = build_mnist_hierarchy();
  auto files = sorted_files(data_dir, {".pgm"});

  std::vector<std::vector<std::vector<Value>>> rows_per_factor(
      layout.skeleton.factors.size());
  std::size_t used = 0;
  for (const auto& file : files) {
    int label = digit_label_from_name(file);
    if (label < 0)
      throw ValidationError("training digits need labels in filenames: " +
                            file);
    auto pyr = HierarchyLayout::pyramid(read_image(file));
    for (std::size_t fi = 0; fi < layout.skeleton.factors.size(); ++fi)
      rows_per_factor[fi].push_back(layout.exemplar_row(fi, pyr, label));
    ++used;
  }

  std::vector<PayloadPtr> payloads(layout.skeleton.payload_count);
  for (std::size_t fi = 0; fi < layout.skeleton.factors.size(); ++fi) {
    const auto& f = layout.skeleton.factors[fi];
    payloads[f.payload_key] = std::make_shared<const MemoryTable>(
        ingest_table(factor_kinds(layout.skeleton, f), rows_per_factor[fi],
                     config.subsample_prob, config.seed + f.payload_key));
  }
  save_payloads(config.model_dir, payloads);
  return {payloads.size(), used, config.model_dir};
}

TrainReport train_spectrogram(const RunConfig& config,
                              const std::string& data_dir) {
  auto files = sorted_files(data_dir, {".wav"});
  std::vector<Spectrogram> clips;
  for (const auto& f : files) {
    double rate = 0.0;
    auto samples = read_wav(f, &rate);
    clips.push_back(log_bin(stft(samples, rate), config.spec_bins));
  }

  // Collect exemplar rows per payload key across all clips.
  std::size_t payload_count = 0;
  std::vector<std::vector<std::vector<Value>>> rows_by_key;
  for (const auto& clip : clips) {
    SpectrogramLayout layout = build_spectrogram_layout(
        clip.n_bins, clip.n_frames, config.spec_width, config.shared_payload);
    if (payload_count == 0) {
      payload_count = layout.skeleton.payload_count;
      rows_by_key.resize(payload_count);
    } else if (layout.skeleton.payload_count != payload_count) {
      throw ValidationError(
          "clips disagree on layout shape; per-position training needs "
          "equal-length clips");
    }
    for (std::size_t fi = 0; fi < layout.skeleton.factors.size(); ++fi) {
      const auto& f = layout.skeleton.factors[fi];
      rows_by_key[f.payload_key].push_back(layout.exemplar_row(fi, clip));
    }
  }

  std::vector<PayloadPtr> payloads(payload_count);
  for (std::size_t key = 0; key < payload_count; ++key) {
    auto& rows = rows_by_key[key];
    if (rows.empty()) throw ValidationError("a payload saw no training rows");
    if (config.task == "table") {
      std::vector<VarKind> kinds(rows.front().size(), VarKind::Complex);
      payloads[key] = std::make_shared<const MemoryTable>(ingest_table(
          std::move(kinds), rows, config.subsample_prob, config.seed + key));
    } else if (config.task == "pca") {
      Eigen::MatrixXcd x(rows.front().size(), rows.size());
      for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t i = 0; i < rows[t].size(); ++i)
          x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
              std::get<Complex>(rows[t][i]);
      PcaResult r = complex_pca(x, config.hidden_p);
      payloads[key] = std::make_shared<const SubspaceFactor>(
          SubspaceFactor::make_complex(
              r.w, subspace_config_from(config, rows.front().size())));
    } else {
      throw ValidationError("spectrogram layouts train 'table' or 'pca', not " +
                            config.task);
    }
  }
  save_payloads(config.model_dir, payloads);
  return {payloads.size(), clips.size(), config.model_dir};
}

}  // namespace

TrainReport cmd_train(const RunConfig& config, const std::string& data_dir) {
  fs::create_directories(config.model_dir);
  TrainReport report;
  if (config.layout == "image" || config.layout == "combined")
    report = train_image(config, data_dir);
  else if (config.layout == "hierarchy")
    report = train_hierarchy(config, data_dir);
  else if (config.layout == "spectrogram")
    report = train_spectrogram(config, data_dir);
  else
    throw ValidationError("unknown layout: " + config.layout);
  save_config(config, config.model_dir + "/manifest.json");
  return report;
}

namespace {

/// Merge the trained layout with the run-time knobs of the caller's config.
RunConfig merge_configs(const RunConfig& model_cfg, const RunConfig& run_cfg) {
  RunConfig c = model_cfg;
  c.evidence_weight = run_cfg.evidence_weight;
  c.factor_weight = run_cfg.factor_weight;
  c.schedule = run_cfg.schedule;
  c.max_iterations = run_cfg.max_iterations;
  c.rollback = run_cfg.rollback;
  c.seed = run_cfg.seed;
  c.model_dir = run_cfg.model_dir;
  return c;
}

Metrics metrics_from_stats(const RunResult& r) {
  Metrics m;
  m.iterations = r.stats.iterations;
  m.opinion_updates = r.stats.opinion_updates;
  m.votes_cast = r.stats.votes_cast;
  m.rollbacks = r.stats.rollbacks;
  m.converged = r.status == RunStatus::Converged;
  return m;
}

/// Image pixel metrics over the layout region (color channels only).
void fill_image_metrics(const ImageLayout& layout, const ImageBuffer& original,
                        const ImageBuffer& restored, Metrics& m) {
  double sq = 0.0;
  double l1 = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < layout.color_channels; ++c)
    for (std::size_t y = layout.y0; y < layout.y0 + layout.rh; ++y)
      for (std::size_t x = layout.x0; x < layout.x0 + layout.rw; ++x) {
        double d = restored.at(x, y, c) - original.at(x, y, c);
        sq += d * d;
        l1 += std::abs(static_cast<double>(restored.byte_at(x, y, c)) -
                       static_cast<double>(original.byte_at(x, y, c)));
        ++n;
      }
  m.mse = sq / static_cast<double>(n);
  m.l1_total = l1;
  m.l1_per_pixel_channel = l1 / static_cast<double>(n);
  m.perfect_restore = l1 == 0.0;
}

struct ImageInferOutcome {
  ImageBuffer restored;
  RunResult result;
  std::size_t unknown = 0;
  bool any_evidence = true;
};

/// Shared image-restoration path for cmd_infer and the benchmark command.
ImageInferOutcome infer_image(const RunConfig& config,
                              const ImageLayout& layout,
                              const std::vector<PayloadPtr>& payloads,
                              const ImageBuffer& input,
                              const ImageBuffer* mask, bool gray_evidence,
                              const Schedule& schedule) {
  if (mask && (mask->width != input.width || mask->height != input.height))
    throw ValidationError("mask size does not match the input image");

  std::vector<EvidenceItem> evidence;
  for (VarId v = 0; v < layout.skeleton.variables.size(); ++v) {
    std::size_t c, ax, ay;
    layout.locate(v, c, ax, ay);
    bool is_gray = layout.has_gray && c == layout.color_channels;
    if (gray_evidence != is_gray) continue;
    if (mask && mask->byte_at(ax, ay, 0) == 0) continue;
    evidence.push_back({v, Value{layout.observed(v, input)},
                        config.evidence_weight});
  }

  ImageInferOutcome out{
      ImageBuffer::create(input.width, input.height,
                          layout.color_channels == 1 ? 1 : 3),
      {},
      0,
      !evidence.empty()};
  if (!out.any_evidence) return out;

  Network net = assemble(layout.skeleton, payloads,
                         flat_weights(config.factor_weight), evidence);
  Engine engine(net, schedule);
  out.result = engine.run();

  // Start from the input so pixels outside the region pass through.
  for (std::size_t c = 0; c < out.restored.channels; ++c)
    for (std::size_t y = 0; y < input.height; ++y)
      for (std::size_t x = 0; x < input.width; ++x)
        out.restored.set_byte(
            x, y, c, input.byte_at(x, y, std::min(c, input.channels - 1)));

  for (VarId v = 0; v < layout.skeleton.variables.size(); ++v) {
    std::size_t c, ax, ay;
    layout.locate(v, c, ax, ay);
    if (c >= out.restored.channels) continue;  // derived gray channel
    if (!out.result.assignment.known(v)) {
      ++out.unknown;
      continue;
    }
    out.restored.set(ax, ay, c, std::get<double>(out.result.assignment.at(v)));
  }
  return out;
}

InferReport infer_image_cmd(const RunConfig& config, const Model& model,
                            const InferOptions& opt) {
  ImageLayout layout = image_layout_from(config);
  if (model.payloads.size() < layout.skeleton.payload_count)
    throw ValidationError("model does not cover the layout");
  ImageBuffer input = read_image(opt.input_path);
  if (input.width != config.width || input.height != config.height)
    throw ValidationError("input image does not match the trained layout");
  std::optional<ImageBuffer> mask;
  if (opt.mask_path) mask = read_image(*opt.mask_path);

  bool gray_evidence = layout.has_gray && input.channels == 1;
  Schedule schedule =
      schedule_from(config, resolve_threads(opt.jobs), opt.trace_path.has_value());
  ImageInferOutcome out =
      infer_image(config, layout, model.payloads, input,
                  mask ? &*mask : nullptr, gray_evidence, schedule);

  InferReport report;
  report.any_evidence = out.any_evidence;
  report.unknown_variables = out.unknown;
  if (!out.any_evidence) {
    write_image(out.restored, opt.output_path);
    report.metrics.converged = false;
    return report;
  }

  if (opt.match_gray && gray_evidence) {
    // Scale restored colors so their gray matches the given evidence.
    for (std::size_t y = 0; y < input.height; ++y)
      for (std::size_t x = 0; x < input.width; ++x) {
        if (x < layout.x0 || x >= layout.x0 + layout.rw || y < layout.y0 ||
            y >= layout.y0 + layout.rh)
          continue;
        double r = out.restored.at(x, y, 0), g = out.restored.at(x, y, 1),
               b = out.restored.at(x, y, 2);
        scale_rgb_to_gray(input.at(x, y, 0), r, g, b);
        out.restored.set(x, y, 0, r);
        out.restored.set(x, y, 1, g);
        out.restored.set(x, y, 2, b);
      }
  }

  write_image(out.restored, opt.output_path);
  if (opt.trace_path) write_trace_csv(out.result.trace, *opt.trace_path);

  report.metrics = metrics_from_stats(out.result);
  if (opt.original_path) {
    ImageBuffer original = read_image(*opt.original_path);
    if (original.width != input.width || original.height != input.height)
      throw ValidationError("original image shape mismatch");
    fill_image_metrics(layout, original, out.restored, report.metrics);
  }
  return report;
}

InferReport infer_spectrogram_cmd(const RunConfig& config, const Model& model,
                                  const InferOptions& opt) {
  double rate = 0.0;
  auto samples = read_wav(opt.input_path, &rate);
  Spectrogram input = log_bin(stft(samples, rate), config.spec_bins);
  SpectrogramLayout layout = build_spectrogram_layout(
      input.n_bins, input.n_frames, config.spec_width, config.shared_payload);
  if (model.payloads.size() < layout.skeleton.payload_count)
    throw ValidationError("model does not cover the layout");

  auto build_evidence = [&](double weight) {
    std::vector<EvidenceItem> evidence;
    for (std::size_t bin = 0; bin < input.n_bins; ++bin)
      for (std::size_t frame = 0; frame < input.n_frames; ++frame) {
        if (opt.erase_frames && frame >= opt.erase_frames->first &&
            frame < opt.erase_frames->second)
          continue;
        evidence.push_back(
            {layout.var(bin, frame), Value{input.at(bin, frame)}, weight});
      }
    return evidence;
  };

  InferReport report;
  auto evidence = build_evidence(config.evidence_weight);
  report.any_evidence = !evidence.empty();
  if (!report.any_evidence) {
    report.metrics.converged = false;
    return report;
  }

  Schedule schedule =
      schedule_from(config, resolve_threads(opt.jobs), opt.trace_path.has_value());
  Network net = assemble(layout.skeleton, model.payloads,
                         flat_weights(config.factor_weight), evidence);
  Engine engine(net, schedule);
  RunResult result = engine.run();

  if (opt.two_pass) {
    // Denoise protocol: rerun with nearly no evidence weight, keeping the
    // factors' final votes as the starting point.
    Network net2 = assemble(layout.skeleton, model.payloads,
                            flat_weights(config.factor_weight),
                            build_evidence(0.01));
    VoteTable warm(net2.num_factors());
    for (FactorId a = 0; a < layout.skeleton.factors.size(); ++a)
      warm[a] = result.votes[a];
    Engine second(net2, schedule);
    RunResult r2 = second.run(&warm);
    r2.stats.iterations += result.stats.iterations;
    r2.stats.opinion_updates += result.stats.opinion_updates;
    r2.stats.votes_cast += result.stats.votes_cast;
    r2.stats.rollbacks += result.stats.rollbacks;
    result = std::move(r2);
  }

  Spectrogram restored = input;
  std::size_t unknown = 0;
  for (std::size_t bin = 0; bin < input.n_bins; ++bin)
    for (std::size_t frame = 0; frame < input.n_frames; ++frame) {
      VarId v = layout.var(bin, frame);
      if (result.assignment.known(v))
        restored.at(bin, frame) = std::get<Complex>(result.assignment.at(v));
      else {
        restored.at(bin, frame) = Complex{0.0, 0.0};
        ++unknown;
      }
    }

  save_spectrogram(restored, opt.output_path);
  export_magnitude_csv(restored, opt.output_path + ".csv");
  if (opt.trace_path) write_trace_csv(result.trace, *opt.trace_path);

  report.metrics = metrics_from_stats(result);
  report.unknown_variables = unknown;
  if (opt.original_path) {
    double orate = 0.0;
    auto osamples = read_wav(*opt.original_path, &orate);
    Spectrogram original = log_bin(stft(osamples, orate), config.spec_bins);
    report.metrics.mse = unbin_magnitude_mse(original, restored);
  }
  return report;
}

}  // namespace

InferReport cmd_infer(const RunConfig& config, const InferOptions& opt) {
  Model model = load_model(config.model_dir);
  RunConfig merged = merge_configs(model.config, config);
  if (merged.layout == "image" || merged.layout == "combined")
    return infer_image_cmd(merged, model, opt);
  if (merged.layout == "spectrogram")
    return infer_spectrogram_cmd(merged, model, opt);
  throw ValidationError("cmd_infer handles image and spectrogram layouts");
}

ClassifyReport cmd_classify(const RunConfig& config,
                            const std::string& digits_dir,
                            const std::string& out_csv, int jobs) {
  Model model = load_model(config.model_dir);
  RunConfig merged = merge_configs(model.config, config);
  if (merged.layout != "hierarchy")
    throw ValidationError("cmd_classify needs a hierarchy model");
  HierarchyLayout layout = build_mnist_hierarchy();
  if (model.payloads.size() < layout.skeleton.payload_count)
    throw ValidationError("model does not cover the layout");

  auto files = sorted_files(digits_dir, {".pgm"});
  Schedule schedule = schedule_from(merged, resolve_threads(jobs), false);

  ClassifyReport report;
  std::uint64_t correct = 0, labeled = 0;
  std::uint64_t total_iters = 0, total_updates = 0, total_votes = 0;
  std::ofstream csv(out_csv, std::ios::trunc);
  if (!csv) throw IoError("cannot open for writing: " + out_csv);
  csv << "file,predicted,label\n";

  for (const auto& file : files) {
    auto pyr = HierarchyLayout::pyramid(read_image(file));
    std::vector<EvidenceItem> evidence;
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x)
        evidence.push_back({layout.pixel_var(0, x, y),
                            Value{pyr[0][y * 32 + x]},
                            merged.factor_weight});
    Network net = assemble(layout.skeleton, model.payloads,
                           hierarchy_weights(merged.factor_weight), evidence);
    Engine engine(net, schedule);
    RunResult r = engine.run();

    int predicted = -1;
    if (r.assignment.known(layout.top_label()))
      predicted = std::get<Label>(r.assignment.at(layout.top_label())).id;
    int truth = digit_label_from_name(file);
    if (truth >= 0) {
      ++labeled;
      if (predicted == truth) ++correct;
    }
    total_iters += r.stats.iterations;
    total_updates += r.stats.opinion_updates;
    total_votes += r.stats.votes_cast;
    report.predictions.emplace_back(file, predicted);
    csv << fs::path(file).filename().string() << ',' << predicted << ','
        << truth << "\n";
  }

  report.metrics.iterations = total_iters;
  report.metrics.opinion_updates = total_updates;
  report.metrics.votes_cast = total_votes;
  report.mean_iterations = static_cast<double>(total_iters) /
                           static_cast<double>(files.size());
  report.mean_opinion_updates = static_cast<double>(total_updates) /
                                static_cast<double>(files.size());
  if (labeled > 0)
    report.metrics.accuracy =
        static_cast<double>(correct) / static_cast<double>(labeled);
  return report;
}

BenchmarkReport cmd_benchmark_restore(const RunConfig& config,
                                      const std::string& data_dir,
                                      const BenchmarkOptions& opt) {
  if (opt.n_trials < 1) throw ValidationError("need at least one trial");
  Model model = load_model(config.model_dir);
  RunConfig merged = merge_configs(model.config, config);
  ImageLayout layout = image_layout_from(merged);
  auto files = sorted_files(data_dir, {".ppm"});
  std::vector<ImageBuffer> stored;
  stored.reserve(files.size());
  for (const auto& f : files) stored.push_back(read_image(f));

  fs::create_directories(opt.out_dir);
  Schedule schedule = schedule_from(merged, resolve_threads(opt.jobs), false);

  BenchmarkReport report;
  report.trials = opt.n_trials;
  std::uint64_t perfect = 0, l1_ok = 0;
  std::uint64_t total_iters = 0, total_rollbacks = 0;
  Matrix trial_rows;

  for (std::size_t trial = 0; trial < opt.n_trials; ++trial) {
    Rng trial_rng = Rng(opt.seed).fork(trial);
    const ImageBuffer& original = stored[trial_rng.below(stored.size())];

    ImageBuffer corrupted = original;
    add_byte_noise(corrupted, opt.noise_sigma, trial_rng.next_u64());
    ImageBuffer mask = ImageBuffer::create(original.width, original.height, 1);
    for (auto& b : mask.bytes) b = 255;
    for (auto [x, y] : center_blob(trial_rng.next_u64(), original.width,
                                   original.height, opt.blob_pixels))
      mask.set_byte(x, y, 0, 0);

    Schedule trial_schedule = schedule;
    trial_schedule.seed = schedule.seed + trial;
    ImageInferOutcome out = infer_image(merged, layout, model.payloads,
                                        corrupted, &mask, false,
                                        trial_schedule);

    Metrics m = metrics_from_stats(out.result);
    fill_image_metrics(layout, original, out.restored, m);
    if (m.perfect_restore) ++perfect;
    if (m.l1_per_pixel_channel <= 1.0) ++l1_ok;
    total_iters += m.iterations;
    total_rollbacks += m.rollbacks;
    report.mean.mse += m.mse;
    report.mean.l1_total += m.l1_total;
    report.mean.l1_per_pixel_channel += m.l1_per_pixel_channel;
    trial_rows.push_back({static_cast<double>(trial), m.mse, m.l1_total,
                          m.l1_per_pixel_channel,
                          m.perfect_restore ? 1.0 : 0.0,
                          static_cast<double>(m.iterations),
                          static_cast<double>(m.rollbacks)});
    if (trial == 0) write_image(out.restored, opt.out_dir + "/restored_0.ppm");
  }

  auto n = static_cast<double>(opt.n_trials);
  report.mean.mse /= n;
  report.mean.l1_total /= n;
  report.mean.l1_per_pixel_channel /= n;
  report.mean.iterations = total_iters / opt.n_trials;
  report.mean.rollbacks = total_rollbacks;
  report.fraction_perfect = static_cast<double>(perfect) / n;
  report.fraction_l1_ok = static_cast<double>(l1_ok) / n;
  report.rollback_rate = total_iters > 0
                             ? static_cast<double>(total_rollbacks) /
                                   static_cast<double>(total_iters)
                             : 0.0;
  write_csv_matrix(trial_rows, opt.out_dir + "/trials.csv");
  write_metrics_csv(report.mean, opt.out_dir + "/summary.csv");
  return report;
}

Metrics cmd_eval(const std::string& original_path,
                 const std::string& reconstruction_path) {
  ImageBuffer a = read_image(original_path);
  ImageBuffer b = read_image(reconstruction_path);
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw ValidationError("image shapes differ");
  Metrics m;
  double sq = 0.0, l1 = 0.0;
  for (std::size_t k = 0; k < a.bytes.size(); ++k) {
    double d = static_cast<double>(a.bytes[k]) / 255.0 -
               static_cast<double>(b.bytes[k]) / 255.0;
    sq += d * d;
    l1 += std::abs(static_cast<double>(a.bytes[k]) -
                   static_cast<double>(b.bytes[k]));
  }
  m.mse = sq / static_cast<double>(a.bytes.size());
  m.l1_total = l1;
  m.l1_per_pixel_channel = l1 / static_cast<double>(a.bytes.size());
  m.perfect_restore = l1 == 0.0;
  return m;
}

}  // namespace mfn
