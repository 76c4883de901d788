#include "wnlab/trajectory_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wnlab/errors.hpp"

namespace wnlab::io {

namespace {

constexpr const char* kMagic = "# wnlab-trajectory";

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

double parse_num(const std::string& s, long line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError("invalid number '" + s + "'", line);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<double> state_values(const FlowState& s) {
  std::vector<double> v;
  if (const auto* d = std::get_if<DenseState>(&s)) {
    v.assign(d->x.data(), d->x.data() + d->x.size());
  } else if (const auto* p = std::get_if<PolarState>(&s)) {
    v.push_back(p->r);
    v.insert(v.end(), p->u.data(), p->u.data() + p->u.size());
  } else {
    const auto& g = std::get<SignedState>(s);
    v.assign(g.u_plus.data(), g.u_plus.data() + g.u_plus.size());
    v.insert(v.end(), g.u_minus.data(), g.u_minus.data() + g.u_minus.size());
  }
  return v;
}

Eigen::Index state_dim(const FlowState& s) {
  return std::visit(
      [](const auto& st) -> Eigen::Index {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, DenseState>) return st.x.size();
        else if constexpr (std::is_same_v<T, PolarState>) return st.u.size();
        else return st.u_plus.size();
      },
      s);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj,
                          const std::optional<std::vector<Eigen::Index>>& coords) {
  const Eigen::Index n = traj.snapshots.empty() ? 0 : state_dim(traj.snapshots.front().state);
  std::vector<Eigen::Index> idx;
  if (coords) {
    idx = *coords;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) idx.push_back(i);
  }
  out << kMagic << " variant=" << to_string(traj.variant) << " depth=" << traj.depth
      << " eta=" << fmt(traj.eta_ratio) << " n=" << n << (coords ? " partial=1" : "") << '\n';
  out << "iter,t,loss";
  switch (traj.variant) {
    case Variant::Plain:
      for (auto i : idx) out << ",x" << i;
      break;
    case Variant::WnConstant:
    case Variant::WnDynamic:
      out << ",r";
      for (auto i : idx) out << ",u" << i;
      break;
    case Variant::Signed:
      for (auto i : idx) out << ",up" << i;
      for (auto i : idx) out << ",um" << i;
      break;
  }
  out << '\n';
  for (const Snapshot& s : traj.snapshots) {
    out << s.iter << ',' << fmt(s.t) << ',' << fmt(s.loss);
    const std::vector<double> v = state_values(s.state);
    const bool polar = std::holds_alternative<PolarState>(s.state);
    const std::size_t off = polar ? 1 : 0;
    if (polar) out << ',' << fmt(v[0]);
    for (auto i : idx) out << ',' << fmt(v[off + static_cast<std::size_t>(i)]);
    if (std::holds_alternative<SignedState>(s.state)) {
      for (auto i : idx) out << ',' << fmt(v[static_cast<std::size_t>(n + i)]);
    }
    out << '\n';
  }
}

TrajectoryRecord read_trajectory_csv(std::istream& in) {
  std::string line;
  long lineno = 1;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0) {
    throw ParseError("missing '# wnlab-trajectory' header", 1);
  }
  TrajectoryRecord traj;
  long n = -1;
  bool partial = false;
  {
    std::istringstream ss(line.substr(std::string(kMagic).size()));
    std::string kv;
    while (ss >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ParseError("malformed header field '" + kv + "'", 1);
      const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      try {
        if (key == "variant") traj.variant = parse_variant(val);
        else if (key == "depth") traj.depth = std::stoi(val);
        else if (key == "eta") traj.eta_ratio = parse_num(val, 1);
        else if (key == "n") n = std::stol(val);
        else if (key == "partial") partial = val == "1";
      } catch (const ConfigError& e) {
        throw ParseError(e.what(), 1);
      } catch (const std::logic_error&) {
        throw ParseError("bad header value '" + kv + "'", 1);
      }
    }
  }
  if (n < 1) throw ParseError("header lacks n=<dimension>", 1);
  if (partial) throw ParseError("partial trajectory (coordinate subset) cannot be audited", 1);

  ++lineno;
  if (!std::getline(in, line) || line.rfind("iter,t,loss", 0) != 0) {
    throw ParseError("expected column header 'iter,t,loss,...'", lineno);
  }
  std::size_t state_cols = static_cast<std::size_t>(n);
  if (traj.variant == Variant::WnConstant || traj.variant == Variant::WnDynamic) state_cols += 1;
  if (traj.variant == Variant::Signed) state_cols *= 2;
  const std::size_t expected = 3 + state_cols;
  if (split(line).size() != expected) {
    throw ParseError("column header has " + std::to_string(split(line).size()) + " fields, expected " +
                         std::to_string(expected),
                     lineno);
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != expected) {
      throw ParseError("row has " + std::to_string(cells.size()) + " fields, expected " +
                           std::to_string(expected),
                       lineno);
    }
    Snapshot s;
    const double it = parse_num(cells[0], lineno);
    s.iter = static_cast<long>(it);
    if (static_cast<double>(s.iter) != it || s.iter < 0) throw ParseError("iteration must be a nonnegative integer", lineno);
    if (!traj.snapshots.empty() && s.iter <= traj.snapshots.back().iter) {
      throw ParseError("iterations must be strictly increasing", lineno);
    }
    s.t = parse_num(cells[1], lineno);
    s.loss = parse_num(cells[2], lineno);
    Vec v(static_cast<Eigen::Index>(state_cols));
    for (std::size_t j = 0; j < state_cols; ++j) v[static_cast<Eigen::Index>(j)] = parse_num(cells[3 + j], lineno);
    switch (traj.variant) {
      case Variant::Plain:
        s.state = DenseState{v};
        break;
      case Variant::WnConstant:
      case Variant::WnDynamic:
        s.state = PolarState{v[0], v.tail(n)};
        break;
      case Variant::Signed:
        s.state = SignedState{v.head(n), v.tail(n)};
        break;
    }
    traj.snapshots.push_back(std::move(s));
  }
  if (traj.snapshots.empty()) throw ParseError("trajectory has no snapshots", lineno);
  const Snapshot& last = traj.snapshots.back();
  traj.terminal.iters = last.iter;
  traj.terminal.t = last.t;
  traj.terminal.final_loss = last.loss;
  if (traj.variant != Variant::Signed) traj.terminal.final_effective_x = effective_x(last.state);
  traj.terminal.final_xtilde = effective_xtilde(last.state, traj.depth);
  return traj;
}

TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_trajectory_csv(in);
}

std::string terminal_summary_json(const TrajectoryRecord& traj) {
  nlohmann::json j;
  j["reason"] = to_string(traj.terminal.reason);
  j["iters"] = traj.terminal.iters;
  j["final_loss"] = traj.terminal.final_loss;
  j["l1_of_xtilde"] = traj.terminal.final_xtilde.lpNorm<1>();
  j["t"] = traj.terminal.t;
  j["positivity_violations"] = traj.positivity_violations;
  return j.dump(2);
}

void write_loss_history_csv(std::ostream& out, const TrajectoryRecord& traj) {
  out << "iter,t,loss\n";
  for (std::size_t i = 0; i < traj.loss_history.size(); ++i) {
    out << i << ',' << fmt(traj.time_history[i]) << ',' << fmt(traj.loss_history[i]) << '\n';
  }
}

}  // namespace wnlab::io
