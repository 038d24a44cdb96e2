#include "mfn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mfn {

namespace {

/// Reads whitespace/comment separated header tokens of a PNM file.
struct PnmHeader {
  std::string text;
  std::size_t pos = 0;

  std::string next_token(const std::string& path) {
    while (pos < text.size()) {
      char c = text[pos];
      if (c == '#') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= text.size())
      throw IoError("malformed image header: " + path);
    std::size_t start = pos;
    while (pos < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '#')
      ++pos;
    return text.substr(start, pos - start);
  }

  std::size_t next_size(const std::string& path) {
    std::string tok = next_token(path);
    std::size_t value = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw IoError("malformed image header: " + path);
    return value;
  }
};

}  // namespace

ImageBuffer read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string raw(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>{});
  if (raw.size() < 2) throw IoError("malformed image header: " + path);

  std::string magic = raw.substr(0, 2);
  bool ascii, color;
  if (magic == "P6") ascii = false, color = true;
  else if (magic == "P3") ascii = true, color = true;
  else if (magic == "P5") ascii = false, color = false;
  else if (magic == "P2") ascii = true, color = false;
  else throw IoError("malformed image header: " + path);

  PnmHeader h{raw, 2};
  std::size_t w = h.next_size(path);
  std::size_t ht = h.next_size(path);
  std::size_t maxval = h.next_size(path);
  if (w == 0 || ht == 0) throw IoError("malformed image header: " + path);
  if (maxval != 255)
    throw IoError("unsupported maxval (expected 255): " + path);

  ImageBuffer img = ImageBuffer::create(w, ht, color ? 3 : 1);
  const std::size_t count = w * ht * img.channels;
  if (ascii) {
    for (std::size_t k = 0; k < count; ++k) {
      std::size_t v;
      try {
        v = h.next_size(path);
      } catch (const IoError&) {
        throw IoError("truncated image payload: " + path);
      }
      if (v > 255) throw IoError("sample exceeds maxval: " + path);
      img.bytes[k] = static_cast<std::uint8_t>(v);
    }
  } else {
    // One whitespace byte separates the header from binary samples.
    std::size_t start = h.pos + 1;
    if (start + count > raw.size())
      throw IoError("truncated image payload: " + path);
    std::copy_n(raw.begin() + static_cast<long>(start), count,
                img.bytes.begin());
  }
  return img;
}

void write_image(const ImageBuffer& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw ValidationError(
        "write_image expects 1 or 3 channels; strip derived channels first");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.bytes.data()),
            static_cast<std::streamsize>(img.bytes.size()));
  if (!out) throw IoError("short write: " + path);
}

double gray_of_rgb(double r, double g, double b) {
  return 0.212673 * r + 0.715152 * g + 0.072175 * b;
}

void scale_rgb_to_gray(double target_gray, double& r, double& g, double& b) {
  double current = gray_of_rgb(r, g, b);
  if (current < 1e-6) {
    r = g = b = target_gray;
    return;
  }
  double scale = target_gray / current;
  r *= scale;
  g *= scale;
  b *= scale;
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  Matrix rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      std::string_view cell(line.data() + start,
                            (comma == std::string::npos ? line.size() : comma) -
                                start);
      double v;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size())
        throw IoError("bad csv cell in " + path);
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged csv rows in " + path);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_csv_matrix(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  char buf[64];
  for (const auto& row : m) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, row[j]);
      if (ec != std::errc{}) throw IoError("csv format failure");
      out.write(buf, p - buf);
      if (j + 1 < row.size()) out << ',';
    }
    out << '\n';
  }
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& section,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= (key == a);
    if (!ok)
      throw ValidationError("unknown config key: " +
                            (section.empty() ? key : section + "." + key));
  }
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError("bad config json: " + std::string(e.what()));
  }

  reject_unknown(doc, "",
                 {"task", "layout", "weights", "factor", "schedule", "seed",
                  "model_dir"});
  RunConfig c;
  c.task = doc.value("task", c.task);
  c.seed = doc.value("seed", c.seed);
  c.model_dir = doc.value("model_dir", c.model_dir);

  if (doc.contains("layout")) {
    const json& l = doc["layout"];
    reject_unknown(l, "layout",
                   {"kind", "width", "height", "channels", "region", "patch",
                    "stride", "linked_patch", "spec_bins", "spec_width",
                    "shared_payload"});
    c.layout = l.value("kind", c.layout);
    c.width = l.value("width", c.width);
    c.height = l.value("height", c.height);
    c.channels = l.value("channels", c.channels);
    c.patch = l.value("patch", c.patch);
    c.stride = l.value("stride", c.stride);
    c.linked_patch = l.value("linked_patch", c.linked_patch);
    c.spec_bins = l.value("spec_bins", c.spec_bins);
    c.spec_width = l.value("spec_width", c.spec_width);
    c.shared_payload = l.value("shared_payload", c.shared_payload);
    if (l.contains("region")) {
      auto r = l["region"].get<std::vector<std::size_t>>();
      if (r.size() != 4) throw ValidationError("layout.region needs 4 values");
      c.region = std::array<std::size_t, 4>{r[0], r[1], r[2], r[3]};
    }
  }
  if (doc.contains("weights")) {
    const json& w = doc["weights"];
    reject_unknown(w, "weights", {"evidence", "factor"});
    c.evidence_weight = w.value("evidence", c.evidence_weight);
    c.factor_weight = w.value("factor", c.factor_weight);
  }
  if (doc.contains("factor")) {
    const json& f = doc["factor"];
    reject_unknown(f, "factor",
                   {"lambda", "alpha", "hidden_p", "subsample_prob",
                    "nmf_max_iters", "nmf_tol"});
    c.lambda = f.value("lambda", c.lambda);
    c.alpha = f.value("alpha", c.alpha);
    c.hidden_p = f.value("hidden_p", c.hidden_p);
    c.subsample_prob = f.value("subsample_prob", c.subsample_prob);
    c.nmf_max_iters = f.value("nmf_max_iters", c.nmf_max_iters);
    c.nmf_tol = f.value("nmf_tol", c.nmf_tol);
  }
  if (doc.contains("schedule")) {
    const json& s = doc["schedule"];
    reject_unknown(s, "schedule", {"mode", "max_iterations", "rollback"});
    c.schedule = s.value("mode", c.schedule);
    c.max_iterations = s.value("max_iterations", c.max_iterations);
    c.rollback = s.value("rollback", c.rollback);
  }
  return c;
}

void save_config(const RunConfig& c, const std::string& path) {
  json doc;
  doc["task"] = c.task;
  doc["seed"] = c.seed;
  doc["model_dir"] = c.model_dir;
  json l;
  l["kind"] = c.layout;
  l["width"] = c.width;
  l["height"] = c.height;
  l["channels"] = c.channels;
  l["patch"] = c.patch;
  l["stride"] = c.stride;
  l["linked_patch"] = c.linked_patch;
  l["spec_bins"] = c.spec_bins;
  l["spec_width"] = c.spec_width;
  l["shared_payload"] = c.shared_payload;
  if (c.region)
    l["region"] = std::vector<std::size_t>{(*c.region)[0], (*c.region)[1],
                                           (*c.region)[2], (*c.region)[3]};
  doc["layout"] = std::move(l);
  doc["weights"] = {{"evidence", c.evidence_weight},
                    {"factor", c.factor_weight}};
  doc["factor"] = {{"lambda", c.lambda},
                   {"alpha", c.alpha},
                   {"hidden_p", c.hidden_p},
                   {"subsample_prob", c.subsample_prob},
                   {"nmf_max_iters", c.nmf_max_iters},
                   {"nmf_tol", c.nmf_tol}};
  doc["schedule"] = {{"mode", c.schedule},
                     {"max_iterations", c.max_iterations},
                     {"rollback", c.rollback}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace mfn
