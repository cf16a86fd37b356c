#include "omniflow/backend.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <thread>
#include <vector>

#include "omniflow/error.hpp"
#include "omniflow/io.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {

void BackendConfig::validate() const {
  if (min_level_dim <= 0 || patch_size <= 0 || patch_stride <= 0 || max_iters_per_patch <= 0 ||
      !(convergence_eps > 0.0) || !(densify_eps > 0.0)) {
    throw ConfigError("backend parameters must all be positive");
  }
  if (patch_stride > patch_size) throw ConfigError("patch stride must not exceed patch size");
}

namespace {

struct Level {
  Image i0;
  Image i1;
  std::vector<std::uint8_t> mask;  // empty = all valid
};

// Per-level dense flow in level pixels.
struct Field {
  int w = 0;
  int h = 0;
  std::vector<float> u;
  std::vector<float> v;

  Field(int w_, int h_) : w(w_), h(h_), u(std::size_t(w_) * h_, 0.0f), v(u.size(), 0.0f) {}

  float sample(const std::vector<float>& a, double x, double y) const {
    x = std::clamp(x, 0.0, double(w - 1));
    y = std::clamp(y, 0.0, double(h - 1));
    const int x0 = std::min(int(x), w - 1), y0 = std::min(int(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = (1 - fx) * a[std::size_t(y0) * w + x0] + fx * a[std::size_t(y0) * w + x1];
    const double bot = (1 - fx) * a[std::size_t(y1) * w + x0] + fx * a[std::size_t(y1) * w + x1];
    return float((1 - fy) * top + fy * bot);
  }
};

Image downsample(const Image& src) {
  const int w = src.width() / 2, h = src.height() / 2;
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = 0.25f * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) + src.at(2 * x, 2 * y + 1) +
                              src.at(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

std::vector<std::uint8_t> downsample_mask(const std::vector<std::uint8_t>& m, int w, int h) {
  if (m.empty()) return {};
  const int w2 = w / 2, h2 = h / 2;
  std::vector<std::uint8_t> out(std::size_t(w2) * h2);
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) {
      const auto at = [&](int xx, int yy) { return m[std::size_t(yy) * w + xx]; };
      out[std::size_t(y) * w2 + x] = at(2 * x, 2 * y) && at(2 * x + 1, 2 * y) && at(2 * x, 2 * y + 1) &&
                                     at(2 * x + 1, 2 * y + 1);
    }
  }
  return out;
}

std::vector<int> patch_origins(int extent, int psz, int stride) {
  std::vector<int> out;
  if (extent < psz) return out;
  for (int p = 0; p + psz <= extent; p += stride) out.push_back(p);
  if (out.back() != extent - psz) out.push_back(extent - psz);
  return out;
}

// For each pixel coordinate, the [lo, hi) range of patch origins covering it.
void covering_ranges(const std::vector<int>& origins, int extent, int psz, std::vector<int>& lo,
                     std::vector<int>& hi) {
  lo.assign(extent, 0);
  hi.assign(extent, 0);
  for (int x = 0; x < extent; ++x) {
    int l = 0;
    while (l < int(origins.size()) && origins[l] + psz <= x) ++l;
    int h = l;
    while (h < int(origins.size()) && origins[h] <= x) ++h;
    lo[x] = l;
    hi[x] = h;
  }
}

void refine_level(const Level& lvl, const BackendConfig& cfg, Field& field) {
  const Image& i0 = lvl.i0;
  const Image& i1 = lvl.i1;
  const int w = i0.width(), h = i0.height();
  const int psz = cfg.patch_size;
  const auto xs = patch_origins(w, psz, cfg.patch_stride);
  const auto ys = patch_origins(h, psz, cfg.patch_stride);
  if (xs.empty() || ys.empty()) return;

  std::vector<float> gx(std::size_t(w) * h), gy(gx.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      gx[std::size_t(y) * w + x] = (i0.at(xr, y) - i0.at(xl, y)) / float(xr - xl);
      gy[std::size_t(y) * w + x] = (i0.at(x, yd) - i0.at(x, yu)) / float(yd - yu);
    }
  }

  const std::size_t nx = xs.size();
  std::vector<float> su(nx * ys.size()), sv(su.size());
  std::vector<std::uint8_t> ok(su.size(), 0);

  parallel_for(int(ys.size()), [&](int j) {
    const int py = ys[j];
    for (std::size_t i = 0; i < nx; ++i) {
      const int px = xs[i];
      const std::size_t s = j * nx + i;
      if (!lvl.mask.empty()) {
        bool inside = true;
        for (int y = py; y < py + psz && inside; ++y)
          for (int x = px; x < px + psz; ++x)
            if (!lvl.mask[std::size_t(y) * w + x]) {
              inside = false;
              break;
            }
        if (!inside) continue;
      }
      const std::size_t c = std::size_t(py + psz / 2) * w + (px + psz / 2);
      const double u0 = field.u[c], v0 = field.v[c];

      double hxx = 1e-6, hxy = 0.0, hyy = 1e-6;
      for (int y = py; y < py + psz; ++y) {
        for (int x = px; x < px + psz; ++x) {
          const double ix = gx[std::size_t(y) * w + x], iy = gy[std::size_t(y) * w + x];
          hxx += ix * ix;
          hxy += ix * iy;
          hyy += iy * iy;
        }
      }
      const double det = hxx * hyy - hxy * hxy;

      double cu = u0, cv = v0;
      double prev_u = cu, prev_v = cv;
      double prev_ssd = std::numeric_limits<double>::infinity();
      for (int it = 0; it < cfg.max_iters_per_patch; ++it) {
        double ssd = 0.0, bx = 0.0, by = 0.0;
        for (int y = py; y < py + psz; ++y) {
          for (int x = px; x < px + psz; ++x) {
            const double r = i1.sample_clamped(x + cu, y + cv) - i0.at(x, y);
            ssd += r * r;
            bx += r * gx[std::size_t(y) * w + x];
            by += r * gy[std::size_t(y) * w + x];
          }
        }
        if (ssd > prev_ssd) {
          cu = prev_u;
          cv = prev_v;
          break;
        }
        prev_ssd = ssd;
        prev_u = cu;
        prev_v = cv;
        const double du = (hyy * bx - hxy * by) / det;
        const double dv = (hxx * by - hxy * bx) / det;
        cu -= du;
        cv -= dv;
        if (std::hypot(du, dv) < cfg.convergence_eps) break;
      }
      if (std::hypot(cu - u0, cv - v0) > psz) {
        cu = u0;
        cv = v0;
      }
      su[s] = float(cu);
      sv[s] = float(cv);
      ok[s] = 1;
    }
  });

  std::vector<int> xlo, xhi, ylo, yhi;
  covering_ranges(xs, w, psz, xlo, xhi);
  covering_ranges(ys, h, psz, ylo, yhi);
  std::vector<float> nu(field.u.size()), nv(field.v.size());
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = std::size_t(y) * w + x;
      double sum_w = 0.0, sum_u = 0.0, sum_v = 0.0;
      for (int j = ylo[y]; j < yhi[y]; ++j) {
        for (int i = xlo[x]; i < xhi[x]; ++i) {
          const std::size_t s = j * nx + i;
          if (!ok[s]) continue;
          const double r = std::abs(i1.sample_clamped(x + su[s], y + sv[s]) - i0.at(x, y));
          const double wt = 1.0 / std::max(cfg.densify_eps, r);
          sum_w += wt;
          sum_u += wt * su[s];
          sum_v += wt * sv[s];
        }
      }
      if (sum_w > 0.0) {
        nu[p] = float(sum_u / sum_w);
        nv[p] = float(sum_v / sum_w);
      } else {
        nu[p] = field.u[p];
        nv[p] = field.v[p];
      }
    }
  });
  field.u = std::move(nu);
  field.v = std::move(nv);
}

}  // namespace

PerspFlow estimate_flow(const Image& a, const Image& b, const BackendConfig& cfg,
                        const PerspFlow* init, std::span<const std::uint8_t> valid_mask) {
  cfg.validate();
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError("flow inputs have different dimensions");
  }
  const int w0 = a.width(), h0 = a.height();
  if (init && (init->width != w0 || init->height != h0)) {
    throw DimensionError("initial flow does not match input dimensions");
  }
  if (!valid_mask.empty() && valid_mask.size() != std::size_t(w0) * h0) {
    throw DimensionError("valid mask does not match input dimensions");
  }

  std::vector<Level> levels;
  levels.push_back({a.to_luma(), b.to_luma(), {valid_mask.begin(), valid_mask.end()}});
  while (std::min(levels.back().i0.width(), levels.back().i0.height()) / 2 >= cfg.min_level_dim) {
    const Level& f = levels.back();
    Level next{downsample(f.i0), downsample(f.i1), downsample_mask(f.mask, f.i0.width(), f.i0.height())};
    levels.push_back(std::move(next));
  }

  const Level& coarsest = levels.back();
  Field field(coarsest.i0.width(), coarsest.i0.height());
  if (init) {
    Field full(w0, h0);
    std::transform(init->du.begin(), init->du.end(), full.u.begin(), [](double d) { return float(d); });
    std::transform(init->dv.begin(), init->dv.end(), full.v.begin(), [](double d) { return float(d); });
    const double sx = double(w0) / field.w, sy = double(h0) / field.h;
    for (int y = 0; y < field.h; ++y) {
      for (int x = 0; x < field.w; ++x) {
        const double fx = (x + 0.5) * sx - 0.5, fy = (y + 0.5) * sy - 0.5;
        field.u[std::size_t(y) * field.w + x] = float(full.sample(full.u, fx, fy) / sx);
        field.v[std::size_t(y) * field.w + x] = float(full.sample(full.v, fx, fy) / sy);
      }
    }
  }

  for (int l = int(levels.size()) - 1; l >= 0; --l) {
    const Level& lvl = levels[l];
    if (field.w != lvl.i0.width() || field.h != lvl.i0.height()) {
      Field finer(lvl.i0.width(), lvl.i0.height());
      for (int y = 0; y < finer.h; ++y) {
        for (int x = 0; x < finer.w; ++x) {
          const double cx = (x + 0.5) / 2.0 - 0.5, cy = (y + 0.5) / 2.0 - 0.5;
          finer.u[std::size_t(y) * finer.w + x] = 2.0f * field.sample(field.u, cx, cy);
          finer.v[std::size_t(y) * finer.w + x] = 2.0f * field.sample(field.v, cx, cy);
        }
      }
      field = std::move(finer);
    }
    refine_level(lvl, cfg, field);
  }

  PerspFlow out(w0, h0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.du[i] = std::isfinite(field.u[i]) ? field.u[i] : 0.0;
    out.dv[i] = std::isfinite(field.v[i]) ? field.v[i] : 0.0;
  }
  return out;
}

BuiltinBackend::BuiltinBackend(BackendConfig cfg) : cfg_(cfg) { cfg_.validate(); }

PerspFlow BuiltinBackend::estimate(const Image& a, const Image& b,
                                   std::span<const std::uint8_t> valid_mask) const {
  return estimate_flow(a, b, cfg_, nullptr, valid_mask);
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
  for (std::size_t pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + value.size())) {
    tmpl.replace(pos, key.size(), value);
  }
  return tmpl;
}

std::string read_tail(const std::filesystem::path& p, std::size_t max_bytes = 4096) {
  std::ifstream is(p, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return s.size() > max_bytes ? s.substr(s.size() - max_bytes) : s;
}

// Runs `cmd` through /bin/sh with stdout+stderr captured to `log`.
// Returns the exit status, or -1 on timeout.
int run_with_timeout(const std::string& cmd, const std::filesystem::path& log, std::chrono::seconds timeout) {
  const pid_t pid = fork();
  if (pid < 0) throw ExternalError("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
      close(fd);
    }
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw ExternalError("waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      return -1;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

struct ScratchDir {
  std::filesystem::path path;
  explicit ScratchDir(const std::filesystem::path& root) {
    const auto base = root.empty() ? std::filesystem::temp_directory_path() : root;
    std::filesystem::create_directories(base);
    std::string tmpl = (base / "omniflow-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw ExternalError("cannot create scratch directory under " + base.string());
    path = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
};

}  // namespace

PerspFlow estimate_flow_external(const Image& a, const Image& b, const ExternalOptions& opts) {
  if (!a.same_shape(b)) throw DimensionError("flow inputs have different dimensions");
  for (const char* key : {"{a}", "{b}", "{out}"}) {
    if (opts.cmd_template.find(key) == std::string::npos) {
      throw ConfigError(std::string("external command template lacks placeholder ") + key);
    }
  }
  ScratchDir dir(opts.scratch_root);
  const auto pa = dir.path / "a.png", pb = dir.path / "b.png", pout = dir.path / "out.flo",
             plog = dir.path / "log.txt";
  io::write_png(pa, a);
  io::write_png(pb, b);
  std::string cmd = substitute(opts.cmd_template, "{a}", shell_quote(pa.string()));
  cmd = substitute(cmd, "{b}", shell_quote(pb.string()));
  cmd = substitute(cmd, "{out}", shell_quote(pout.string()));

  const int status = run_with_timeout(cmd, plog, opts.timeout);
  if (status == -1) {
    throw ExternalError("external backend timed out after " + std::to_string(opts.timeout.count()) + " s",
                        read_tail(plog));
  }
  if (status != 0) {
    throw ExternalError("external backend exited with status " + std::to_string(status), read_tail(plog));
  }
  if (!std::filesystem::exists(pout)) throw ExternalError("external backend produced no output", read_tail(plog));
  FlowGrid g;
  try {
    g = io::read_flo(pout);
  } catch (const ConfigError& e) {
    throw ExternalError(std::string("external backend output is corrupt: ") + e.what(), read_tail(plog));
  }
  if (g.width != a.width() || g.height != a.height()) {
    throw DimensionError("external backend returned " + std::to_string(g.width) + "x" +
                         std::to_string(g.height) + " flow for " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " inputs");
  }
  PerspFlow out(g.width, g.height);
  out.du = std::move(g.du);
  out.dv = std::move(g.dv);
  return out;
}

ExternalBackend::ExternalBackend(ExternalOptions opts) : opts_(std::move(opts)) {}

PerspFlow ExternalBackend::estimate(const Image& a, const Image& b, std::span<const std::uint8_t>) const {
  return estimate_flow_external(a, b, opts_);
}

}  // namespace omniflow
