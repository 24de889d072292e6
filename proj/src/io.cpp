#include "orbitrack/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

#include "orbitrack/errors.hpp"

namespace orbitrack {

using nlohmann::json;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_field_csv(const std::filesystem::path& path, const Field& f) {
  std::ofstream out(path);
  if (!out) throw StructuralError("write_field_csv: cannot open " + path.string());
  const Grid& g = f.grid;
  out << (g.dim == 1 ? "x" : "x,y");
  for (int c = 0; c < f.components(); ++c) out << ",comp" << c;
  out << "\n";
  const int n = g.points;
  for (int p = 0; p < g.total_points(); ++p) {
    if (g.dim == 1) {
      out << format_g17(g.coord(p));
    } else {
      out << format_g17(g.coord(p % n)) << ',' << format_g17(g.coord(p / n));
    }
    for (int c = 0; c < f.components(); ++c) out << ',' << format_g17(f.values(p, c));
    out << "\n";
  }
}

Field read_field_csv(const std::filesystem::path& path, const Grid& grid, int components) {
  std::ifstream in(path);
  if (!in) throw StructuralError("read_field_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw StructuralError("read_field_csv: empty file");
  Field f(grid, components);
  const int coord_cols = grid.dim;
  for (int p = 0; p < grid.total_points(); ++p) {
    if (!std::getline(in, line))
      throw StructuralError("read_field_csv: unexpected end of file at row " + std::to_string(p));
    std::vector<double> vals;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      vals.push_back(std::stod(line.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    if (static_cast<int>(vals.size()) != coord_cols + components)
      throw StructuralError("read_field_csv: wrong column count at row " + std::to_string(p));
    double x_expect = grid.coord(grid.dim == 1 ? p : p % grid.points);
    if (std::abs(vals[0] - x_expect) > 1e-9 * (1.0 + std::abs(x_expect)))
      throw StructuralError("read_field_csv: grid mismatch at row " + std::to_string(p));
    for (int c = 0; c < components; ++c) f.values(p, c) = vals[coord_cols + c];
  }
  return f;
}

void save_pattern(const std::filesystem::path& dir, const Pattern& p) {
  std::filesystem::create_directories(dir);
  json meta;
  meta["model"] = p.model->name();
  meta["params"] = p.model->params();
  meta["grid"] = {{"dim", p.ustar.grid.dim},
                  {"extent", p.ustar.grid.extent},
                  {"points", p.ustar.grid.points}};
  meta["components"] = p.ustar.components();
  meta["group"] = p.x.kind == GroupKind::Translation1D ? "translation_1d" : "se2";
  meta["x_coords"] = std::vector<double>(p.x.coords.data(), p.x.coords.data() + p.x.coords.size());
  meta["residual_norm"] = p.residual_norm;
  meta["decomposed"] = p.decomposed;
  if (p.decomposed) {
    std::vector<std::vector<double>> eigs;
    for (auto& l : p.center_eigenvalues) eigs.push_back({l.real(), l.imag()});
    meta["center_eigenvalues"] = eigs;
    meta["spectral_gap"] = p.spectral_gap;
  }
  if (p.constants) {
    meta["constants"] = {{"M", p.constants->M},   {"a", p.constants->a},
                         {"M1", p.constants->M1}, {"M2", p.constants->M2},
                         {"M3", p.constants->M3}, {"fit_t0", p.constants->fit_t0},
                         {"fit_t1", p.constants->fit_t1}};
  }
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
  write_field_csv(dir / "ustar.csv", p.ustar);
  for (size_t i = 0; i < p.center_tangents.size(); ++i)
    write_field_csv(dir / ("tangent" + std::to_string(i) + ".csv"), p.center_tangents[i]);
  for (size_t i = 0; i < p.adjoint_functions.size(); ++i)
    write_field_csv(dir / ("adjoint" + std::to_string(i) + ".csv"), p.adjoint_functions[i]);
}

Pattern load_pattern(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw StructuralError("load_pattern: missing meta.json in " + dir.string());
  json meta = json::parse(meta_in);

  Grid grid(meta["grid"]["dim"].get<int>(), meta["grid"]["extent"].get<double>(),
            meta["grid"]["points"].get<int>());
  int components = meta["components"].get<int>();

  Pattern p;
  p.model = make_model(meta["model"].get<std::string>(),
                       meta["params"].get<std::map<std::string, double>>());
  p.ustar = read_field_csv(dir / "ustar.csv", grid, components);
  GroupKind kind =
      meta["group"].get<std::string>() == "se2" ? GroupKind::SE2 : GroupKind::Translation1D;
  auto xc = meta["x_coords"].get<std::vector<double>>();
  p.x = AlgebraElement::from_coords(
      kind, Eigen::Map<const Eigen::VectorXd>(xc.data(), static_cast<int>(xc.size())));
  p.residual_norm = meta["residual_norm"].get<double>();
  p.decomposed = meta["decomposed"].get<bool>();
  if (p.decomposed) {
    for (auto& e : meta["center_eigenvalues"])
      p.center_eigenvalues.emplace_back(e[0].get<double>(), e[1].get<double>());
    p.spectral_gap = meta["spectral_gap"].get<double>();
    for (int i = 0; i < algebra_dim(kind); ++i) {
      p.center_tangents.push_back(
          read_field_csv(dir / ("tangent" + std::to_string(i) + ".csv"), grid, components));
      p.adjoint_functions.push_back(
          read_field_csv(dir / ("adjoint" + std::to_string(i) + ".csv"), grid, components));
    }
  }
  if (meta.contains("constants")) {
    StabilityConstants sc;
    sc.M = meta["constants"]["M"].get<double>();
    sc.a = meta["constants"]["a"].get<double>();
    sc.M1 = meta["constants"]["M1"].get<double>();
    sc.M2 = meta["constants"]["M2"].get<double>();
    sc.M3 = meta["constants"]["M3"].get<double>();
    sc.fit_t0 = meta["constants"]["fit_t0"].get<double>();
    sc.fit_t1 = meta["constants"]["fit_t1"].get<double>();
    p.constants = sc;
  }
  return p;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t) {
  std::ofstream out(path);
  if (!out) throw StructuralError("write_trajectory_csv: cannot open " + path.string());
  const bool tracked = !t.deviation.empty();
  int phase_dim =
      tracked && !t.phase_coords.empty() ? static_cast<int>(t.phase_coords[0].size()) : 0;
  out << "t";
  if (tracked) {
    out << ",deviation";
    for (int j = 0; j < phase_dim; ++j) out << ",phase" << j;
  }
  out << "\n";
  for (size_t i = 0; i < t.times.size(); ++i) {
    out << format_g17(t.times[i]);
    if (tracked) {
      out << ',' << format_g17(t.deviation[i]);
      for (int j = 0; j < phase_dim; ++j) out << ',' << format_g17(t.phase_coords[i][j]);
    }
    out << "\n";
  }
}

}  // namespace orbitrack
