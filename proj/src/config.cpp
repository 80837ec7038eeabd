#include "evolve/config.hpp"

#include <fstream>
#include <sstream>

namespace evolve {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& v, int line, int col) {
  std::size_t used = 0;
  double x;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ParseError("expected a decimal literal, got '" + v + "'", line, col);
  }
  if (used != v.size()) throw ParseError("trailing characters after number '" + v + "'", line, col);
  return x;
}

long parse_integer(const std::string& v, int line, int col) {
  double x = parse_number(v, line, col);
  long i = static_cast<long>(x);
  if (static_cast<double>(i) != x) throw ParseError("expected an integer, got '" + v + "'", line, col);
  return i;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, int line, int col, F&& one) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ParseError("empty list element", line, col);
    out.push_back(one(item));
  }
  if (out.empty()) throw ParseError("empty list", line, col);
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;

  std::string profile_kind = "affine";
  double c0 = 1.0, c1 = 0.0, omega = 1.0;
  std::string instance_name = "static-circle";
  int n = 9;
  double horizon = 1.0;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    int col = static_cast<int>(raw.find_first_not_of(" \t")) + 1;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno, col);
      section = trim(line.substr(1, line.size() - 2));
      if (section != "instance" && section != "run")
        throw ParseError("unknown section [" + section + "]", lineno, col);
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno, col);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno, col);
    if (value.empty()) throw ParseError("empty value for key '" + key + "'", lineno, col);
    int vcol = col + static_cast<int>(eq) + 1;

    if (section == "instance") {
      if (key == "name") instance_name = value;
      else if (key == "n") n = static_cast<int>(parse_integer(value, lineno, vcol));
      else if (key == "T") horizon = parse_number(value, lineno, vcol);
      else if (key == "profile") profile_kind = value;
      else if (key == "c0") c0 = parse_number(value, lineno, vcol);
      else if (key == "c1") c1 = parse_number(value, lineno, vcol);
      else if (key == "omega") omega = parse_number(value, lineno, vcol);
      else throw ParseError("unknown key '" + key + "' in [instance]", lineno, col);
    } else if (section == "run") {
      if (key == "command") cfg.command = value;
      else if (key == "N") cfg.levels = parse_list<int>(value, lineno, vcol, [&](const std::string& s) {
          return static_cast<int>(parse_integer(s, lineno, vcol)); });
      else if (key == "M") cfg.step_counts = parse_list<int>(value, lineno, vcol, [&](const std::string& s) {
          return static_cast<int>(parse_integer(s, lineno, vcol)); });
      else if (key == "stepper") {
        if (value == "midpoint") cfg.stepper.scheme = Scheme::ImplicitMidpoint;
        else if (value == "backward-euler") cfg.stepper.scheme = Scheme::BackwardEuler;
        else throw ParseError("unknown stepper '" + value + "'", lineno, vcol);
      } else if (key == "lin_tol") cfg.stepper.lin_tol = parse_number(value, lineno, vcol);
      else if (key == "init") {
        if (value == "truncate") cfg.init_mode = InitMode::BTruncation;
        else if (value == "project") cfg.init_mode = InitMode::HProjection;
        else throw ParseError("unknown init mode '" + value + "'", lineno, vcol);
      } else if (key == "gamma") cfg.gammas = parse_list<double>(value, lineno, vcol, [&](const std::string& s) {
          return parse_number(s, lineno, vcol); });
      else if (key == "out") cfg.out_dir = value;
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_integer(value, lineno, vcol));
      else if (key == "svg") {
        if (value == "on") cfg.emit_svg = true;
        else if (value == "off") cfg.emit_svg = false;
        else throw ParseError("svg must be 'on' or 'off'", lineno, vcol);
      } else if (key == "u0_decay") cfg.u0_decay = parse_number(value, lineno, vcol);
      else if (key == "f_decay") cfg.f_decay = parse_number(value, lineno, vcol);
      else if (key == "f") cfg.f_kind = value;
      else if (key == "f_tag") {
        if (value == "h") cfg.f_tag = LoadTag::StateH;
        else if (value == "vstar") cfg.f_tag = LoadTag::DualVstar;
        else throw ParseError("f_tag must be 'h' or 'vstar'", lineno, vcol);
      } else throw ParseError("unknown key '" + key + "' in [run]", lineno, col);
    } else {
      throw ParseError("key outside of any section", lineno, col);
    }
  }

  Profile profile;
  if (profile_kind == "affine") profile = Profile::affine(c0, c1);
  else if (profile_kind == "sin") profile = Profile::sin_offset(c0, c1, omega);
  else throw ParseError("unknown profile '" + profile_kind + "'", 0, 0);
  try {
    cfg.instance = InstanceSpec::parse_name(instance_name, n, horizon, profile);
  } catch (const PreconditionError& e) {
    throw ParseError(e.what(), 0, 0);
  }

  if (cfg.command != "validate" && cfg.command != "solve" && cfg.command != "converge" &&
      cfg.command != "infsup" && cfg.command != "report")
    throw ParseError("unknown command '" + cfg.command + "'", 0, 0);
  if (cfg.f_kind != "zero" && cfg.f_kind != "decay" && cfg.f_kind != "manufactured")
    throw ParseError("unknown load kind '" + cfg.f_kind + "'", 0, 0);
  if (cfg.stepper.lin_tol <= 0.0) throw ParseError("lin_tol must be positive", 0, 0);
  for (int v : cfg.levels)
    if (v < 1) throw ParseError("N values must be positive", 0, 0);
  for (int v : cfg.step_counts)
    if (v < 1) throw ParseError("M values must be positive", 0, 0);
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string(), 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace evolve
