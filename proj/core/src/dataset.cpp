#include "vcae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "vcae/error.hpp"

namespace vcae {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, std::uint64_t offset, const std::string& what) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (in.gcount() != 4) {
    throw FormatError("IDX: truncated " + what + " at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

double quantize_to_byte_grid(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return std::round(clamped * 255.0) / 255.0;
}

// --- synthetic digit drawing ------------------------------------------------

struct Canvas {
  std::size_t rows, cols;
  std::vector<double>& pix;

  void stamp(double r, double c, double radius, double value) {
    const long r0 = std::lround(std::floor(r - radius));
    const long r1 = std::lround(std::ceil(r + radius));
    const long c0 = std::lround(std::floor(c - radius));
    const long c1 = std::lround(std::ceil(c + radius));
    for (long i = std::max(0L, r0); i <= std::min<long>(rows - 1, r1); ++i) {
      for (long j = std::max(0L, c0); j <= std::min<long>(cols - 1, c1); ++j) {
        const double d = std::hypot(i - r, j - c);
        if (d <= radius) {
          double& p = pix[i * cols + j];
          p = std::max(p, value * std::min(1.0, 1.5 * (radius - d + 0.5) / radius));
        }
      }
    }
  }

  // Segment endpoints in unit coordinates (row, col) in [0,1].
  void line(double r0, double c0, double r1, double c1, double thickness, double value) {
    const double pr0 = r0 * (rows - 1), pc0 = c0 * (cols - 1);
    const double pr1 = r1 * (rows - 1), pc1 = c1 * (cols - 1);
    const double len = std::hypot(pr1 - pr0, pc1 - pc0);
    const int steps = std::max(2, static_cast<int>(std::ceil(len * 2)));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      stamp(pr0 + t * (pr1 - pr0), pc0 + t * (pc1 - pc0), thickness, value);
    }
  }

  // Elliptical arc, angles in radians, center/half-axes in unit coordinates.
  void arc(double cr, double cc, double ar, double ac, double a0, double a1, double thickness,
           double value) {
    const int steps = 64;
    for (int s = 0; s <= steps; ++s) {
      const double t = a0 + (a1 - a0) * s / steps;
      const double r = (cr + ar * std::sin(t)) * (rows - 1);
      const double c = (cc + ac * std::cos(t)) * (cols - 1);
      stamp(r, c, thickness, value);
    }
  }
};

void draw_template(Canvas& cv, int cls, double th) {
  switch (cls % 10) {
    case 0:
      cv.arc(0.5, 0.5, 0.28, 0.20, 0, 2 * M_PI, th, 1.0);
      break;
    case 1:
      cv.line(0.18, 0.52, 0.82, 0.52, th, 1.0);
      cv.line(0.30, 0.38, 0.18, 0.52, th, 1.0);
      break;
    case 2:
      cv.arc(0.32, 0.5, 0.14, 0.20, -M_PI * 0.9, M_PI * 0.5, th, 1.0);
      cv.line(0.42, 0.68, 0.80, 0.30, th, 1.0);
      cv.line(0.80, 0.30, 0.80, 0.72, th, 1.0);
      break;
    case 3:
      cv.arc(0.33, 0.48, 0.15, 0.20, -M_PI * 0.7, M_PI * 0.6, th, 1.0);
      cv.arc(0.66, 0.48, 0.15, 0.22, -M_PI * 0.6, M_PI * 0.7, th, 1.0);
      break;
    case 4:
      cv.line(0.18, 0.62, 0.82, 0.62, th, 1.0);
      cv.line(0.18, 0.62, 0.55, 0.28, th, 1.0);
      cv.line(0.55, 0.28, 0.55, 0.78, th, 1.0);
      break;
    case 5:
      cv.line(0.2, 0.32, 0.2, 0.72, th, 1.0);
      cv.line(0.2, 0.32, 0.48, 0.32, th, 1.0);
      cv.arc(0.63, 0.48, 0.17, 0.22, -M_PI * 0.55, M_PI * 0.75, th, 1.0);
      break;
    case 6:
      cv.arc(0.62, 0.48, 0.18, 0.18, 0, 2 * M_PI, th, 1.0);
      cv.line(0.16, 0.60, 0.48, 0.34, th, 1.0);
      break;
    case 7:
      cv.line(0.2, 0.28, 0.2, 0.75, th, 1.0);
      cv.line(0.2, 0.75, 0.8, 0.42, th, 1.0);
      break;
    case 8:
      cv.arc(0.32, 0.5, 0.13, 0.16, 0, 2 * M_PI, th, 1.0);
      cv.arc(0.67, 0.5, 0.16, 0.19, 0, 2 * M_PI, th, 1.0);
      break;
    case 9:
      cv.arc(0.36, 0.5, 0.16, 0.18, 0, 2 * M_PI, th, 1.0);
      cv.line(0.40, 0.67, 0.82, 0.58, th, 1.0);
      break;
    default:
      break;
  }
}

}  // namespace

LabeledSet load_idx(const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError("IDX: cannot open image file " + images_path.string());
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError("IDX: cannot open label file " + labels_path.string());

  const std::uint32_t img_magic = read_u32_be(img, 0, "image magic");
  if (img_magic != kImageMagic) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "IDX: bad image magic 0x%08x at byte offset 0", img_magic);
    throw FormatError(msg);
  }
  const std::uint32_t count = read_u32_be(img, 4, "image count");
  const std::uint32_t rows = read_u32_be(img, 8, "image rows");
  const std::uint32_t cols = read_u32_be(img, 12, "image cols");

  const std::uint32_t lab_magic = read_u32_be(lab, 0, "label magic");
  if (lab_magic != kLabelMagic) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "IDX: bad label magic 0x%08x at byte offset 0", lab_magic);
    throw FormatError(msg);
  }
  const std::uint32_t lab_count = read_u32_be(lab, 4, "label count");
  if (lab_count != count) {
    throw FormatError("IDX: image count " + std::to_string(count) + " != label count " +
                      std::to_string(lab_count) + " at byte offset 4");
  }

  LabeledSet set;
  set.image_rows = rows;
  set.image_cols = cols;
  set.inputs.reserve(count);
  set.labels.reserve(count);

  const std::size_t m = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(m);
  for (std::uint32_t i = 0; i < count; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(m));
    if (img.gcount() != static_cast<std::streamsize>(m)) {
      throw FormatError("IDX: truncated image payload at byte offset " +
                        std::to_string(16 + std::size_t(i) * m + img.gcount()));
    }
    std::vector<double> px(m);
    for (std::size_t j = 0; j < m; ++j) px[j] = buf[j] / 255.0;
    set.inputs.push_back(std::move(px));

    char lb;
    lab.read(&lb, 1);
    if (lab.gcount() != 1) {
      throw FormatError("IDX: truncated label payload at byte offset " + std::to_string(8 + i));
    }
    set.labels.push_back(static_cast<unsigned char>(lb));
  }
  return set;
}

void save_idx(const LabeledSet& set, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
  if (!img) throw FormatError("IDX: cannot write image file " + images_path.string());
  std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
  if (!lab) throw FormatError("IDX: cannot write label file " + labels_path.string());

  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<std::uint32_t>(set.size()));
  write_u32_be(img, static_cast<std::uint32_t>(set.image_rows));
  write_u32_be(img, static_cast<std::uint32_t>(set.image_cols));
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(set.size()));

  std::vector<unsigned char> buf;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& px = set.inputs[i];
    buf.resize(px.size());
    for (std::size_t j = 0; j < px.size(); ++j) {
      buf[j] = static_cast<unsigned char>(
          std::lround(std::clamp(px[j], 0.0, 1.0) * 255.0));
    }
    img.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const char lb = static_cast<char>(set.labels[i]);
    lab.write(&lb, 1);
  }
  if (!img || !lab) throw FormatError("IDX: write failed");
}

LabeledSet synth_digits(std::size_t n_per_class, std::size_t classes, std::size_t rows,
                        std::size_t cols, std::uint64_t seed) {
  if (rows < 8 || cols < 8) {
    throw DomainError("synth_digits: shape must be at least 8x8, got " + std::to_string(rows) +
                      "x" + std::to_string(cols));
  }
  LabeledSet set;
  set.image_rows = rows;
  set.image_cols = cols;
  Rng rng(seed);

  const double th = std::max(0.6, rows / 24.0);
  for (std::size_t cls = 0; cls < classes; ++cls) {
    for (std::size_t k = 0; k < n_per_class; ++k) {
      std::vector<double> px(rows * cols, 0.0);
      Canvas cv{rows, cols, px};
      draw_template(cv, static_cast<int>(cls), th);

      // per-sample jitter: shift by up to +-1 pixel, scale intensity, add noise
      const long dr = static_cast<long>(rng.below(3)) - 1;
      const long dc = static_cast<long>(rng.below(3)) - 1;
      if (dr != 0 || dc != 0) {
        std::vector<double> shifted(rows * cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
          const long si = static_cast<long>(i) - dr;
          if (si < 0 || si >= static_cast<long>(rows)) continue;
          for (std::size_t j = 0; j < cols; ++j) {
            const long sj = static_cast<long>(j) - dc;
            if (sj < 0 || sj >= static_cast<long>(cols)) continue;
            shifted[i * cols + j] = px[si * cols + sj];
          }
        }
        px = std::move(shifted);
      }
      const double scale = 0.8 + 0.2 * rng.uniform01();
      for (double& p : px) {
        p = quantize_to_byte_grid(p * scale + 0.10 * rng.uniform01());
      }
      set.inputs.push_back(std::move(px));
      set.labels.push_back(static_cast<int>(cls));
    }
  }
  return set;
}

std::vector<bool> trigger_mask(std::size_t rows, std::size_t cols, const TriggerSpec& trigger) {
  if (trigger.height + trigger.margin_bottom > rows ||
      trigger.width + trigger.margin_right > cols) {
    throw DomainError("trigger_mask: rectangle does not fit inside " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " image");
  }
  std::vector<bool> mask(rows * cols, false);
  const std::size_t r0 = rows - trigger.margin_bottom - trigger.height;
  const std::size_t c0 = cols - trigger.margin_right - trigger.width;
  for (std::size_t i = r0; i < r0 + trigger.height; ++i) {
    for (std::size_t j = c0; j < c0 + trigger.width; ++j) {
      mask[i * cols + j] = true;
    }
  }
  return mask;
}

InjectReport inject_trigger(LabeledSet& set, const PoisonPlan& plan, std::uint64_t seed) {
  if (plan.fraction < 0.0 || plan.fraction > 1.0) {
    throw DomainError("inject_trigger: fraction must lie in [0,1]");
  }
  if (plan.trigger.intensity < 0.0 || plan.trigger.intensity > 1.0) {
    throw DomainError("inject_trigger: intensity must lie in [0,1]");
  }
  const auto mask = trigger_mask(set.image_rows, set.image_cols, plan.trigger);

  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] == plan.target_class) targets.push_back(i);
  }

  InjectReport report;
  report.target_present = !targets.empty();
  if (targets.empty()) return report;

  const auto n_attack =
      static_cast<std::size_t>(std::lround(plan.fraction * static_cast<double>(targets.size())));
  Rng rng(seed);
  rng.shuffle(targets);
  targets.resize(n_attack);
  std::sort(targets.begin(), targets.end());

  for (const std::size_t idx : targets) {
    auto& px = set.inputs[idx];
    for (std::size_t j = 0; j < px.size(); ++j) {
      if (mask[j]) px[j] = plan.trigger.intensity;
    }
  }
  report.attacked = n_attack;
  return report;
}

}  // namespace vcae
