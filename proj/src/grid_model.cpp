#include "grid_model.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "error.hpp"

namespace pinnse {

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Slack: return "slack";
    case BusKind::PV: return "pv";
    case BusKind::PQ: return "pq";
  }
  return "?";
}

namespace {

void validate_buses(const std::vector<Bus>& buses) {
  if (buses.empty()) throw GridError("grid has no buses");
  int slack = -1;
  for (std::size_t k = 0; k < buses.size(); ++k) {
    const Bus& bus = buses[k];
    if (bus.id != static_cast<int>(k)) {
      throw GridError("bus " + std::to_string(bus.id + 1) +
                      ": ids must be unique and contiguous");
    }
    if (bus.kind == BusKind::Slack) {
      if (slack >= 0) {
        throw GridError("bus " + std::to_string(bus.id + 1) +
                        ": duplicate slack (bus " + std::to_string(slack + 1) +
                        " is already the slack)");
      }
      slack = bus.id;
    }
    if (bus.kind != BusKind::PQ && !(bus.v_setpoint > 0.0)) {
      throw GridError("bus " + std::to_string(bus.id + 1) + ": voltage setpoint must be > 0");
    }
  }
  if (slack < 0) throw GridError("grid has no slack bus");
}

}  // namespace

AdmittanceMatrix build_admittance(const std::vector<Bus>& buses,
                                  const std::vector<Branch>& branches) {
  validate_buses(buses);
  const int n = static_cast<int>(buses.size());
  ComplexMatrix y = ComplexMatrix::Zero(n, n);

  for (std::size_t k = 0; k < branches.size(); ++k) {
    const Branch& br = branches[k];
    const std::string tag = "branch " + std::to_string(k + 1);
    if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n) {
      throw GridError(tag + ": endpoint references a missing bus");
    }
    if (br.from_bus == br.to_bus) throw GridError(tag + ": from_bus equals to_bus");
    if (br.r == 0.0 && br.x == 0.0) throw GridError(tag + ": zero series impedance");
    if (!(br.tap_ratio > 0.0)) throw GridError(tag + ": tap ratio must be > 0");

    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex half_charging(0.0, br.b_charging / 2.0);
    const Complex tap = std::polar(br.tap_ratio, br.phase_shift);

    const int f = br.from_bus;
    const int t = br.to_bus;
    y(f, f) += (ys + half_charging) / (br.tap_ratio * br.tap_ratio);
    y(t, t) += ys + half_charging;
    y(f, t) += -ys / std::conj(tap);
    y(t, f) += -ys / tap;
  }
  for (const Bus& bus : buses) y(bus.id, bus.id) += Complex(bus.shunt_g, bus.shunt_b);

  if (!y.allFinite()) throw GridError("admittance matrix has non-finite entries");
  return AdmittanceMatrix(std::move(y));
}

GridModel::GridModel(std::vector<Bus> buses, std::vector<Branch> branches,
                     double base_mva, std::string name)
    : buses_(std::move(buses)),
      branches_(std::move(branches)),
      base_mva_(base_mva),
      name_(std::move(name)) {
  if (!(base_mva_ > 0.0)) throw GridError("base_mva must be > 0");
  y_bus_ = build_admittance(buses_, branches_);
  for (const Bus& bus : buses_) {
    if (bus.kind == BusKind::Slack) slack_ = bus.id;
  }
}

GridModel GridModel::with_bus_kind(int bus, BusKind kind) const {
  if (bus < 0 || bus >= n()) throw GridError("bus index out of range");
  GridModel copy = *this;
  copy.buses_[bus].kind = kind;
  validate_buses(copy.buses_);
  for (const Bus& b : copy.buses_) {
    if (b.kind == BusKind::Slack) copy.slack_ = b.id;
  }
  return copy;
}

// ---------------------------------------------------------------------------
// Case file parsing

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

double parse_number(std::string_view field, int line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError("invalid number '" + std::string(field) + "'", line);
  }
  return value;
}

int parse_index(std::string_view field, int line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError("invalid integer '" + std::string(field) + "'", line);
  }
  return value;
}

BusKind parse_kind(std::string_view field, int line) {
  if (field == "slack") return BusKind::Slack;
  if (field == "pv") return BusKind::PV;
  if (field == "pq") return BusKind::PQ;
  throw ParseError("unknown bus kind '" + std::string(field) + "'", line);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

GridModel parse_case(std::string_view text) {
  enum class Section { None, Case, Buses, Branches };
  Section section = Section::None;
  std::string name;
  double base_mva = 100.0;
  // Raw MW/MVAr values; converted once base_mva is known.
  struct RawBus {
    int label;
    BusKind kind;
    double pd, qd, gs, bs, pg, vset;
    int line;
  };
  std::vector<RawBus> raw_buses;
  std::vector<Branch> branches;
  std::vector<int> branch_lines;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto fields = split_fields(line);
    if (fields.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (fields[0].front() == '[') {
      if (fields.size() != 1 || fields[0].back() != ']') throw ParseError("malformed section header", line_no);
      const std::string_view tag = fields[0].substr(1, fields[0].size() - 2);
      if (tag == "case") section = Section::Case;
      else if (tag == "buses") section = Section::Buses;
      else if (tag == "branches") section = Section::Branches;
      else throw ParseError("unknown section [" + std::string(tag) + "]", line_no);
      continue;
    }

    switch (section) {
      case Section::None:
        throw ParseError("data outside of any section", line_no);
      case Section::Case:
        if (fields.size() != 2) throw ParseError("expected 'key value'", line_no);
        if (fields[0] == "name") name = std::string(fields[1]);
        else if (fields[0] == "base_mva") base_mva = parse_number(fields[1], line_no);
        else throw ParseError("unknown case key '" + std::string(fields[0]) + "'", line_no);
        break;
      case Section::Buses:
        if (fields.size() != 8) throw ParseError("bus row needs 8 columns", line_no);
        raw_buses.push_back({parse_index(fields[0], line_no), parse_kind(fields[1], line_no),
                             parse_number(fields[2], line_no), parse_number(fields[3], line_no),
                             parse_number(fields[4], line_no), parse_number(fields[5], line_no),
                             parse_number(fields[6], line_no), parse_number(fields[7], line_no),
                             line_no});
        break;
      case Section::Branches: {
        if (fields.size() != 7) throw ParseError("branch row needs 7 columns", line_no);
        Branch br;
        br.from_bus = parse_index(fields[0], line_no) - 1;
        br.to_bus = parse_index(fields[1], line_no) - 1;
        br.r = parse_number(fields[2], line_no);
        br.x = parse_number(fields[3], line_no);
        br.b_charging = parse_number(fields[4], line_no);
        br.tap_ratio = parse_number(fields[5], line_no);
        br.phase_shift = parse_number(fields[6], line_no) * kPi / 180.0;
        branches.push_back(br);
        branch_lines.push_back(line_no);
        break;
      }
    }
    if (end == text.size()) break;
  }

  if (!(base_mva > 0.0)) throw ParseError("base_mva must be > 0");
  std::vector<Bus> buses;
  buses.reserve(raw_buses.size());
  for (std::size_t k = 0; k < raw_buses.size(); ++k) {
    const RawBus& r = raw_buses[k];
    if (r.label != static_cast<int>(k) + 1) {
      throw ParseError("bus ids must be 1..N in order", r.line);
    }
    Bus bus;
    bus.id = static_cast<int>(k);
    bus.kind = r.kind;
    bus.base_load_p = r.pd / base_mva;
    bus.base_load_q = r.qd / base_mva;
    bus.shunt_g = r.gs / base_mva;
    bus.shunt_b = r.bs / base_mva;
    bus.gen_p = r.pg / base_mva;
    bus.v_setpoint = r.vset;
    buses.push_back(bus);
  }
  const int n = static_cast<int>(buses.size());
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const Branch& br = branches[k];
    if (br.from_bus < 0 || br.from_bus >= n || br.to_bus < 0 || br.to_bus >= n) {
      throw ParseError("branch endpoint references a missing bus", branch_lines[k]);
    }
  }
  return GridModel(std::move(buses), std::move(branches), base_mva, std::move(name));
}

GridModel load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str());
}

GridModel load_case14() { return parse_case(case14_text()); }

}  // namespace pinnse
