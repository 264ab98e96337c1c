#ifndef FSR_REGION_EXPLORER_HPP
#define FSR_REGION_EXPLORER_HPP

/** @file
 * Uniform grid scans of a frozen membership test, connected-component
 * labeling of the accepted cells, and search for stationary points of the
 * output-error cost (every such point has Z_1 = 0 and is therefore a
 * candidate seed for components far from the prediction error estimate).
 *
 * Cells are indexed row-major with dimension 0 outermost. Each cell is
 * represented by its center; nothing here encloses the region rigorously.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>
#include <json.hpp>

#include "fsr/core_types.hpp"
#include "fsr/oe_model.hpp"
#include "fsr/serialization.hpp"

namespace fsr {

inline constexpr const char* kScanDisclaimer =
    "Point-sampled scan of a bounded box: components outside the box or thinner than a cell may be "
    "missing, so no statement about the total volume or confidence of the reported set is made.";

struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> resolution;

  std::size_t dims() const { return lower.size(); }

  void validate() const {
    if (lower.empty()) throw DomainError("grid needs at least one dimension");
    if (upper.size() != lower.size() || resolution.size() != lower.size()) {
      throw DomainError("grid lower/upper/resolution lengths differ");
    }
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (!(lower[k] < upper[k])) throw DomainError("grid needs lower < upper in every dimension");
      if (resolution[k] < 2) throw DomainError("grid needs resolution >= 2 in every dimension");
    }
  }

  std::size_t cell_count() const {
    std::size_t c = 1;
    for (auto r : resolution) c *= r;
    return c;
  }

  std::vector<std::size_t> unravel(std::size_t flat) const {
    std::vector<std::size_t> idx(dims());
    for (std::size_t k = dims(); k-- > 0;) {
      idx[k] = flat % resolution[k];
      flat /= resolution[k];
    }
    return idx;
  }

  std::size_t ravel(const std::vector<std::size_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < dims(); ++k) flat = flat * resolution[k] + idx[k];
    return flat;
  }

  double center(std::size_t dim, std::size_t i) const {
    return lower[dim] + (static_cast<double>(i) + 0.5) * (upper[dim] - lower[dim]) / static_cast<double>(resolution[dim]);
  }

  Eigen::VectorXd center(const std::vector<std::size_t>& idx) const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(dims()));
    for (std::size_t k = 0; k < dims(); ++k) c(static_cast<Eigen::Index>(k)) = center(k, idx[k]);
    return c;
  }

  /// Same box, every resolution multiplied by `factor`.
  GridSpec refined(std::size_t factor = 2) const {
    GridSpec g = *this;
    for (auto& r : g.resolution) r *= factor;
    return g;
  }

  bool operator==(const GridSpec&) const = default;
};

struct MembershipGrid {
  GridSpec spec;
  std::vector<std::uint8_t> accepted;       // one per cell
  std::vector<double> z1;                   // Z_1 per cell, NaN if unknown
  std::map<std::size_t, std::string> diagnostics;  // per-cell tester errors

  std::size_t accepted_count() const {
    return static_cast<std::size_t>(std::count(accepted.begin(), accepted.end(), std::uint8_t{1}));
  }
};

/// Evaluates `tester` (theta -> TestVerdict) at every cell center. Tester
/// exceptions mark the cell rejected and are kept as diagnostics. With
/// jobs > 1 cells are split across threads; results do not depend on jobs.
template <typename Tester>
MembershipGrid scan(const Tester& tester, const GridSpec& spec, std::size_t jobs = 1) {
  spec.validate();
  const std::size_t cells = spec.cell_count();
  MembershipGrid grid{spec, std::vector<std::uint8_t>(cells, 0),
                      std::vector<double>(cells, std::numeric_limits<double>::quiet_NaN()), {}};

  jobs = std::max<std::size_t>(1, std::min(jobs, cells));
  std::vector<std::map<std::size_t, std::string>> notes(jobs);
  auto work = [&](std::size_t worker) {
    for (std::size_t c = worker; c < cells; c += jobs) {
      try {
        const TestVerdict v = tester(spec.center(spec.unravel(c)));
        grid.accepted[c] = v.accepted ? 1 : 0;
        if (!v.z_values.empty()) grid.z1[c] = v.z_values.front();
        if (v.diagnostic) notes[worker].emplace(c, *v.diagnostic);
      } catch (const std::exception& e) {
        grid.accepted[c] = 0;
        notes[worker].emplace(c, e.what());
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& n : notes) grid.diagnostics.merge(n);
  return grid;
}

enum class Connectivity {
  Orthogonal,  // 2d neighbors (4 in 2-D)
  Full         // 3^d - 1 neighbors (8 in 2-D)
};

inline const char* to_string(Connectivity c) { return c == Connectivity::Orthogonal ? "orthogonal" : "full"; }

struct ComponentInfo {
  int label = 0;
  std::size_t cells = 0;
  std::vector<std::size_t> bbox_lower_index;
  std::vector<std::size_t> bbox_upper_index;
  std::size_t representative = 0;  // flat cell index
  double representative_z1 = std::numeric_limits<double>::quiet_NaN();
};

struct ComponentLabeling {
  std::vector<int> labels;  // 0 = rejected, 1..component_count otherwise
  std::size_t component_count = 0;
  std::vector<ComponentInfo> components;  // components[k].label == k + 1
  Connectivity connectivity = Connectivity::Orthogonal;
};

namespace detail {

inline std::vector<std::vector<int>> neighbor_offsets(std::size_t d, Connectivity conn) {
  std::vector<std::vector<int>> out;
  if (conn == Connectivity::Orthogonal) {
    for (std::size_t k = 0; k < d; ++k) {
      for (int s : {-1, 1}) {
        std::vector<int> o(d, 0);
        o[k] = s;
        out.push_back(o);
      }
    }
    return out;
  }
  std::vector<int> o(d, -1);
  while (true) {
    if (std::any_of(o.begin(), o.end(), [](int v) { return v != 0; })) out.push_back(o);
    std::size_t k = 0;
    while (k < d && o[k] == 1) o[k++] = -1;
    if (k == d) break;
    ++o[k];
  }
  return out;
}

/// Flat index of idx + off, or npos when it leaves the grid.
inline std::size_t offset_cell(const GridSpec& spec, const std::vector<std::size_t>& idx, const std::vector<int>& off) {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < spec.dims(); ++k) {
    const auto v = static_cast<long long>(idx[k]) + off[k];
    if (v < 0 || v >= static_cast<long long>(spec.resolution[k])) return static_cast<std::size_t>(-1);
    flat = flat * spec.resolution[k] + static_cast<std::size_t>(v);
  }
  return flat;
}

}  // namespace detail

/// Flood-fill labeling; components are numbered in row-major discovery order.
inline ComponentLabeling label_components(const MembershipGrid& grid, Connectivity conn = Connectivity::Orthogonal) {
  const GridSpec& spec = grid.spec;
  const std::size_t cells = spec.cell_count();
  if (grid.accepted.size() != cells) throw DomainError("grid lattice does not match its spec");
  const auto offsets = detail::neighbor_offsets(spec.dims(), conn);

  ComponentLabeling out;
  out.connectivity = conn;
  out.labels.assign(cells, 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < cells; ++start) {
    if (!grid.accepted[start] || out.labels[start] != 0) continue;
    const int label = static_cast<int>(++out.component_count);
    ComponentInfo info;
    info.label = label;
    info.bbox_lower_index = spec.unravel(start);
    info.bbox_upper_index = info.bbox_lower_index;
    info.representative = start;
    double best_z = std::numeric_limits<double>::infinity();

    out.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      ++info.cells;
      const auto idx = spec.unravel(c);
      for (std::size_t k = 0; k < spec.dims(); ++k) {
        info.bbox_lower_index[k] = std::min(info.bbox_lower_index[k], idx[k]);
        info.bbox_upper_index[k] = std::max(info.bbox_upper_index[k], idx[k]);
      }
      const double z = c < grid.z1.size() && !std::isnan(grid.z1[c]) ? grid.z1[c]
                                                                       : std::numeric_limits<double>::infinity();
      if (z < best_z || (z == best_z && c < info.representative)) {
        best_z = z;
        info.representative = c;
      }
      for (const auto& off : offsets) {
        const std::size_t nb = detail::offset_cell(spec, idx, off);
        if (nb == static_cast<std::size_t>(-1) || !grid.accepted[nb] || out.labels[nb] != 0) continue;
        out.labels[nb] = label;
        stack.push_back(nb);
      }
    }
    if (std::isfinite(best_z)) info.representative_z1 = best_z;
    out.components.push_back(std::move(info));
  }
  return out;
}

/// Labels of components that contain at least one cell of the given index
/// slab (dimension `dim` fixed at `index`).
inline std::set<int> labels_in_slab(const ComponentLabeling& lab, const GridSpec& spec, std::size_t dim,
                                    std::size_t index) {
  std::set<int> out;
  for (std::size_t c = 0; c < lab.labels.size(); ++c) {
    if (lab.labels[c] != 0 && spec.unravel(c)[dim] == index) out.insert(lab.labels[c]);
  }
  return out;
}

/// Index along `dim` whose cell center is nearest to `value`.
inline std::size_t nearest_index(const GridSpec& spec, std::size_t dim, double value) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < spec.resolution[dim]; ++i) {
    if (std::abs(spec.center(dim, i) - value) < std::abs(spec.center(dim, best) - value)) best = i;
  }
  return best;
}

/// Cell containing theta, or npos when theta lies outside the box.
inline std::size_t cell_of(const GridSpec& spec, const Eigen::VectorXd& theta) {
  std::vector<std::size_t> idx(spec.dims());
  for (std::size_t k = 0; k < spec.dims(); ++k) {
    const double t = (theta(static_cast<Eigen::Index>(k)) - spec.lower[k]) / (spec.upper[k] - spec.lower[k]);
    if (!(t >= 0.0 && t <= 1.0)) return static_cast<std::size_t>(-1);
    idx[k] = std::min(spec.resolution[k] - 1, static_cast<std::size_t>(t * static_cast<double>(spec.resolution[k])));
  }
  return spec.ravel(idx);
}

/// Pairs of coarse components separated by at least `band` rejected cells
/// (Chebyshev distance > band) that share a component on the refined grid.
/// `fine` must have every resolution exactly `factor` times `coarse`.
inline std::vector<std::pair<int, int>> refinement_merges(const ComponentLabeling& coarse, const GridSpec& coarse_spec,
                                                          const ComponentLabeling& fine, const GridSpec& fine_spec,
                                                          std::size_t factor = 2, std::size_t band = 2) {
  if (fine_spec != coarse_spec.refined(factor)) throw DomainError("fine grid is not a refinement of the coarse grid");
  const std::size_t d = coarse_spec.dims();

  // Fine labels reached from each coarse component.
  std::vector<std::set<int>> fine_of(coarse.component_count + 1);
  for (std::size_t c = 0; c < coarse.labels.size(); ++c) {
    if (coarse.labels[c] == 0) continue;
    const auto idx = coarse_spec.unravel(c);
    std::vector<std::size_t> sub(d, 0);
    while (true) {
      std::vector<std::size_t> f(d);
      for (std::size_t k = 0; k < d; ++k) f[k] = idx[k] * factor + sub[k];
      const int fl = fine.labels[fine_spec.ravel(f)];
      if (fl != 0) fine_of[static_cast<std::size_t>(coarse.labels[c])].insert(fl);
      std::size_t k = 0;
      while (k < d && sub[k] == factor - 1) sub[k++] = 0;
      if (k == d) break;
      ++sub[k];
    }
  }

  // Coarse components within Chebyshev distance `band` of each other.
  std::set<std::pair<int, int>> near;
  std::vector<std::vector<int>> box_offsets;
  {
    std::vector<int> o(d, -static_cast<int>(band));
    while (true) {
      box_offsets.push_back(o);
      std::size_t k = 0;
      while (k < d && o[k] == static_cast<int>(band)) o[k++] = -static_cast<int>(band);
      if (k == d) break;
      ++o[k];
    }
  }
  for (std::size_t c = 0; c < coarse.labels.size(); ++c) {
    const int a = coarse.labels[c];
    if (a == 0) continue;
    const auto idx = coarse_spec.unravel(c);
    for (const auto& off : box_offsets) {
      const std::size_t nb = detail::offset_cell(coarse_spec, idx, off);
      if (nb == static_cast<std::size_t>(-1)) continue;
      const int b = coarse.labels[nb];
      if (b != 0 && b != a) near.insert({std::min(a, b), std::max(a, b)});
    }
  }

  std::vector<std::pair<int, int>> merges;
  for (int a = 1; a <= static_cast<int>(coarse.component_count); ++a) {
    for (int b = a + 1; b <= static_cast<int>(coarse.component_count); ++b) {
      if (near.count({a, b})) continue;
      const auto& fa = fine_of[static_cast<std::size_t>(a)];
      const auto& fb = fine_of[static_cast<std::size_t>(b)];
      if (std::any_of(fa.begin(), fa.end(), [&](int l) { return fb.count(l) > 0; })) merges.emplace_back(a, b);
    }
  }
  return merges;
}

// ---------------------------------------------------------------------------
// Stationary points of the output-error cost

struct StationaryPoint {
  OeTheta theta;
  double cost = 0.0;
  double gradient_norm = 0.0;
};

struct StationarySearchOptions {
  std::size_t starts_per_dim = 9;
  std::size_t max_iterations = 300;
  double gradient_tolerance = 1e-8;
  double dedupe_distance = 1e-4;
  double divergence_radius = 1e3;
};

/// Minimizes ||dJ/dtheta||^2 from a grid of starts over the box of `spec`
/// (first two dimensions), so saddles and inflection points are found as well
/// as minima. Returns distinct points sorted by cost; empty if none converge.
inline std::vector<StationaryPoint> find_stationary_points(const IoDataset& ds, const GridSpec& spec,
                                                           const StationarySearchOptions& opt = {}) {
  spec.validate();
  if (spec.dims() != 2) throw DomainError("stationary point search needs a 2-D grid");
  if (opt.starts_per_dim < 2) throw DomainError("need at least 2 starts per dimension");

  std::vector<StationaryPoint> found;
  const auto k = static_cast<double>(opt.starts_per_dim - 1);
  for (std::size_t i = 0; i < opt.starts_per_dim; ++i) {
    for (std::size_t j = 0; j < opt.starts_per_dim; ++j) {
      Eigen::Vector2d theta(spec.lower[0] + (spec.upper[0] - spec.lower[0]) * static_cast<double>(i) / k,
                            spec.lower[1] + (spec.upper[1] - spec.lower[1]) * static_cast<double>(j) / k);
      Eigen::Vector2d g = oe_cost_gradient(OeTheta::from(theta), ds);
      double f = g.squaredNorm();
      double lambda = 1e-6;
      for (std::size_t it = 0; it < opt.max_iterations && std::isfinite(f); ++it) {
        if (std::sqrt(f) < opt.gradient_tolerance) break;
        // Levenberg-Marquardt on the residual g(theta) with Jacobian H.
        const Eigen::Matrix2d h = oe_cost_hessian(OeTheta::from(theta), ds);
        bool improved = false;
        for (int tries = 0; tries < 40; ++tries) {
          Eigen::Matrix2d a = h.transpose() * h;
          a.diagonal().array() += lambda * std::max(1e-300, a.trace());
          const Eigen::Vector2d step = -a.ldlt().solve(h.transpose() * g);
          const Eigen::Vector2d cand = theta + step;
          const Eigen::Vector2d gc = oe_cost_gradient(OeTheta::from(cand), ds);
          const double fc = gc.squaredNorm();
          if (std::isfinite(fc) && fc < f) {
            theta = cand;
            g = gc;
            f = fc;
            lambda = std::max(1e-15, lambda * 0.1);
            improved = true;
            break;
          }
          lambda *= 10.0;
        }
        if (!improved || theta.norm() > opt.divergence_radius) break;
      }
      const double gn = std::sqrt(f);
      if (!(gn < opt.gradient_tolerance)) continue;
      const bool duplicate = std::any_of(found.begin(), found.end(), [&](const StationaryPoint& p) {
        return (p.theta.vec() - theta).norm() <= opt.dedupe_distance;
      });
      if (!duplicate) found.push_back({OeTheta::from(theta), oe_cost(OeTheta::from(theta), ds), gn});
    }
  }
  std::sort(found.begin(), found.end(), [](const StationaryPoint& a, const StationaryPoint& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return std::make_pair(a.theta.numerator, a.theta.denominator) <
           std::make_pair(b.theta.numerator, b.theta.denominator);
  });
  return found;
}

// ---------------------------------------------------------------------------
// Export / import

struct ExportPaths {
  std::string grid_csv;
  std::string components_json;
};

inline ExportPaths export_paths(const std::string& prefix) {
  return {prefix + "_grid.csv", prefix + "_components.json"};
}

inline nlohmann::json components_to_json(const MembershipGrid& grid, const ComponentLabeling& lab) {
  const GridSpec& spec = grid.spec;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : lab.components) {
    nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
    for (std::size_t k = 0; k < spec.dims(); ++k) {
      lo.push_back(spec.center(k, c.bbox_lower_index[k]));
      hi.push_back(spec.center(k, c.bbox_upper_index[k]));
    }
    const auto rep = spec.unravel(c.representative);
    nlohmann::json rep_theta = nlohmann::json::array();
    for (std::size_t k = 0; k < spec.dims(); ++k) rep_theta.push_back(spec.center(k, rep[k]));
    nlohmann::json r{{"index", rep}, {"theta", rep_theta}};
    r["z1"] = std::isnan(c.representative_z1) ? nlohmann::json(nullptr) : nlohmann::json(c.representative_z1);
    comps.push_back({{"label", c.label},
                     {"cells", c.cells},
                     {"bbox",
                      {{"lower", lo},
                       {"upper", hi},
                       {"lower_index", c.bbox_lower_index},
                       {"upper_index", c.bbox_upper_index}}},
                     {"representative", r}});
  }
  return {{"schema_version", kSchemaVersion},
          {"disclaimer", kScanDisclaimer},
          {"grid", {{"lower", spec.lower}, {"upper", spec.upper}, {"resolution", spec.resolution}}},
          {"connectivity", to_string(lab.connectivity)},
          {"accepted_cells", grid.accepted_count()},
          {"component_count", lab.component_count},
          {"components", comps}};
}

inline std::string grid_to_csv(const MembershipGrid& grid, const ComponentLabeling& lab) {
  const GridSpec& spec = grid.spec;
  std::string out;
  if (spec.dims() == 2) {
    out = "i,j,theta1,theta2,accepted,label\n";
  } else {
    for (std::size_t k = 0; k < spec.dims(); ++k) out += "i" + std::to_string(k + 1) + ",";
    for (std::size_t k = 0; k < spec.dims(); ++k) out += "theta" + std::to_string(k + 1) + ",";
    out += "accepted,label\n";
  }
  for (std::size_t c = 0; c < spec.cell_count(); ++c) {
    const auto idx = spec.unravel(c);
    for (auto i : idx) out += std::to_string(i) + ",";
    for (std::size_t k = 0; k < spec.dims(); ++k) out += detail::format_double(spec.center(k, idx[k])) + ",";
    out += grid.accepted[c] ? "1," : "0,";
    out += std::to_string(lab.labels[c]);
    out += '\n';
  }
  return out;
}

/// Writes `<prefix>_grid.csv` and `<prefix>_components.json`.
inline ExportPaths export_grid(const MembershipGrid& grid, const ComponentLabeling& lab, const std::string& prefix) {
  if (lab.labels.size() != grid.accepted.size()) throw DomainError("labeling does not match grid");
  const auto paths = export_paths(prefix);
  detail::write_file(paths.grid_csv, grid_to_csv(grid, lab));
  detail::write_file(paths.components_json, components_to_json(grid, lab).dump(1) + "\n");
  return paths;
}

struct ImportedGrid {
  MembershipGrid grid;
  ComponentLabeling labeling;
};

inline ImportedGrid import_grid(const std::string& prefix) {
  const auto paths = export_paths(prefix);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(paths.components_json));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(paths.components_json, e.what());
  }
  ImportedGrid out;
  try {
    out.grid.spec.lower = j.at("grid").at("lower").get<std::vector<double>>();
    out.grid.spec.upper = j.at("grid").at("upper").get<std::vector<double>>();
    out.grid.spec.resolution = j.at("grid").at("resolution").get<std::vector<std::size_t>>();
    out.labeling.connectivity =
        j.at("connectivity").get<std::string>() == "full" ? Connectivity::Full : Connectivity::Orthogonal;
    out.labeling.component_count = j.at("component_count").get<std::size_t>();
    for (const auto& c : j.at("components")) {
      ComponentInfo info;
      info.label = c.at("label").get<int>();
      info.cells = c.at("cells").get<std::size_t>();
      info.bbox_lower_index = c.at("bbox").at("lower_index").get<std::vector<std::size_t>>();
      info.bbox_upper_index = c.at("bbox").at("upper_index").get<std::vector<std::size_t>>();
      const auto& rep = c.at("representative");
      info.representative = out.grid.spec.ravel(rep.at("index").get<std::vector<std::size_t>>());
      if (!rep.at("z1").is_null()) info.representative_z1 = rep.at("z1").get<double>();
      out.labeling.components.push_back(std::move(info));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(paths.components_json, e.what());
  }
  const GridSpec& spec = out.grid.spec;
  spec.validate();

  const std::size_t cells = spec.cell_count();
  out.grid.accepted.assign(cells, 0);
  out.grid.z1.assign(cells, std::numeric_limits<double>::quiet_NaN());
  out.labeling.labels.assign(cells, 0);
  const std::string text = detail::read_file(paths.grid_csv);
  std::size_t row = 0;
  bool header = true;
  for (auto line : detail::split(text, '\n')) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = detail::split(line, ',');
    const std::size_t d = spec.dims();
    if (f.size() != 2 * d + 2) throw ParseError(paths.grid_csv, "bad column count at row " + std::to_string(row + 1));
    std::vector<std::size_t> idx(d);
    for (std::size_t k = 0; k < d; ++k) idx[k] = static_cast<std::size_t>(detail::parse_double(f[k], "index"));
    const std::size_t c = spec.ravel(idx);
    if (c >= cells) throw ParseError(paths.grid_csv, "cell index out of range");
    out.grid.accepted[c] = f[2 * d] == "1" ? 1 : 0;
    out.labeling.labels[c] = static_cast<int>(detail::parse_double(f[2 * d + 1], "label"));
    ++row;
  }
  if (row != cells) throw ParseError(paths.grid_csv, "expected " + std::to_string(cells) + " rows");
  for (auto& c : out.labeling.components) {
    if (!std::isnan(c.representative_z1)) out.grid.z1[c.representative] = c.representative_z1;
  }
  return out;
}

/// Static scatter of accepted cells colored by component label (2-D only).
inline std::string render_svg(const MembershipGrid& grid, const ComponentLabeling& lab, double size_px = 600.0) {
  const GridSpec& spec = grid.spec;
  if (spec.dims() != 2) throw DomainError("SVG rendering needs a 2-D grid");
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double cw = size_px / static_cast<double>(spec.resolution[0]);
  const double ch = size_px / static_cast<double>(spec.resolution[1]);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_px + 80 << "\" height=\"" << size_px + 60
     << "\">\n<rect x=\"60\" y=\"10\" width=\"" << size_px << "\" height=\"" << size_px
     << "\" fill=\"white\" stroke=\"black\"/>\n";
  for (std::size_t c = 0; c < lab.labels.size(); ++c) {
    if (lab.labels[c] == 0) continue;
    const auto idx = spec.unravel(c);
    const double x = 60.0 + static_cast<double>(idx[0]) * cw;
    const double y = 10.0 + size_px - static_cast<double>(idx[1] + 1) * ch;  // theta2 grows upwards
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
       << palette[static_cast<std::size_t>(lab.labels[c] - 1) % std::size(palette)] << "\"/>\n";
  }
  os << "<text x=\"60\" y=\"" << size_px + 30 << "\" font-size=\"12\">theta1 [" << spec.lower[0] << ", "
     << spec.upper[0] << "]</text>\n";
  os << "<text x=\"5\" y=\"" << 10 + size_px / 2 << "\" font-size=\"12\">theta2</text>\n";
  os << "<text x=\"5\" y=\"" << size_px + 50 << "\" font-size=\"12\">theta2 [" << spec.lower[1] << ", "
     << spec.upper[1] << "], components: " << lab.component_count << "</text>\n</svg>\n";
  return os.str();
}

}  // namespace fsr

#endif  // FSR_REGION_EXPLORER_HPP
