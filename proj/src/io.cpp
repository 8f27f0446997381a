#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semicp/harness.hpp"

namespace semicp {

using Json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double get_num(const Json& j, const char* key) {
  const Json& v = j.at(key);
  return v.is_null() ? kNaN : v.get<double>();
}

template <class T>
T get_int(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_number_float()) return static_cast<T>(v.get<double>());
  return v.get<T>();
}

// ---- per-row conversions -------------------------------------------------

Json to_json(const SweepRow& r) {
  return {{"n", r.n},
          {"lambda", r.lambda},
          {"replicas", r.replicas},
          {"extinct_count", r.extinct_count},
          {"survived_count", r.survived_count},
          {"tau_median", num(r.tau_median)},
          {"tau_mean", num(r.tau_mean)},
          {"tau_p95", num(r.tau_p95)},
          {"horizon", r.horizon}};
}
void from_json(const Json& j, SweepRow& r) {
  r = {get_int<int>(j, "n"),
       get_num(j, "lambda"),
       get_int<std::size_t>(j, "replicas"),
       get_int<std::size_t>(j, "extinct_count"),
       get_int<std::size_t>(j, "survived_count"),
       get_num(j, "tau_median"),
       get_num(j, "tau_mean"),
       get_num(j, "tau_p95"),
       get_num(j, "horizon")};
}

Json to_json(const MeanFieldRow& r) {
  return {{"n", r.n},           {"lambda", r.lambda},   {"T", r.T},
          {"replicas", r.replicas}, {"epsilon", r.epsilon}, {"exceed_count", r.exceed_count},
          {"sup_dev_median", num(r.sup_dev_median)}};
}
void from_json(const Json& j, MeanFieldRow& r) {
  r = {get_int<int>(j, "n"),          get_num(j, "lambda"),
       get_num(j, "T"),               get_int<std::size_t>(j, "replicas"),
       get_num(j, "epsilon"),         get_int<std::size_t>(j, "exceed_count"),
       get_num(j, "sup_dev_median")};
}

Json to_json(const AuditRow& r) {
  Json j = {{"variant", r.variant},
            {"n", r.n},
            {"lambda", r.lambda},
            {"replicas", r.replicas},
            {"violation_replicas", r.violation_replicas}};
  const auto& v = r.first_violation_example;
  j["first_violation_time"] = v ? num(v->time) : Json(nullptr);
  j["first_violation_b1"] = v ? Json(v->pair.s1.b) : Json(nullptr);
  j["first_violation_g1"] = v ? Json(v->pair.s1.g) : Json(nullptr);
  j["first_violation_b2"] = v ? Json(v->pair.s2.b) : Json(nullptr);
  j["first_violation_g2"] = v ? Json(v->pair.s2.g) : Json(nullptr);
  return j;
}
void from_json(const Json& j, AuditRow& r) {
  r.variant = j.at("variant").get<std::string>();
  r.n = get_int<int>(j, "n");
  r.lambda = get_num(j, "lambda");
  r.replicas = get_int<std::size_t>(j, "replicas");
  r.violation_replicas = get_int<std::size_t>(j, "violation_replicas");
  r.first_violation_example.reset();
  if (!j.at("first_violation_time").is_null()) {
    r.first_violation_example = OrderViolation{
        get_num(j, "first_violation_time"),
        {{get_int<int>(j, "first_violation_b1"), get_int<int>(j, "first_violation_g1")},
         {get_int<int>(j, "first_violation_b2"), get_int<int>(j, "first_violation_g2")}}};
  }
}

Json to_json(const LumpingRow& r) {
  return {{"n", r.n}, {"lambda", r.lambda}, {"T", r.T}, {"replicas", r.replicas},
          {"tv_distance", r.tv_distance}};
}
void from_json(const Json& j, LumpingRow& r) {
  r = {get_int<int>(j, "n"), get_num(j, "lambda"), get_num(j, "T"), get_int<std::size_t>(j, "replicas"),
       get_num(j, "tv_distance")};
}

Json to_json(const AuxRow& r) {
  return {{"check", r.check},       {"lambda", num(r.lambda)},     {"n", r.n},
          {"theta", num(r.theta)},  {"replicas", r.replicas},     {"observed", num(r.observed)},
          {"threshold", num(r.threshold)}, {"passed", r.passed}, {"detail", r.detail}};
}
void from_json(const Json& j, AuxRow& r) {
  r.check = j.at("check").get<std::string>();
  r.lambda = get_num(j, "lambda");
  r.n = get_int<int>(j, "n");
  r.theta = get_num(j, "theta");
  r.replicas = get_int<std::size_t>(j, "replicas");
  r.observed = get_num(j, "observed");
  r.threshold = get_num(j, "threshold");
  r.passed = j.at("passed").get<bool>();
  r.detail = j.at("detail").is_null() ? std::string() : j.at("detail").get<std::string>();
}

Json to_json(const OdeRow& r) { return {{"lambda", r.lambda}, {"t", r.t}, {"b", r.b}, {"g", r.g}}; }
void from_json(const Json& j, OdeRow& r) {
  r = {get_num(j, "lambda"), get_num(j, "t"), get_num(j, "b"), get_num(j, "g")};
}

// ---- CSV -----------------------------------------------------------------

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  return csv_quote(v.get<std::string>());
}

std::vector<std::vector<std::string>> csv_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
      }
      rec.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw IoError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  return records;
}

Json csv_value(const std::string& s) {
  if (s.empty()) return nullptr;
  if (s == "true") return true;
  if (s == "false") return false;
  char* end = nullptr;
  errno = 0;
  const long long i = std::strtoll(s.c_str(), &end, 10);
  if (errno == 0 && end == s.c_str() + s.size()) return i;
  errno = 0;
  const double d = std::strtod(s.c_str(), &end);
  if (errno == 0 && end == s.c_str() + s.size()) return d;
  return s;
}

}  // namespace

template <class Row>
std::string format_rows(const std::vector<Row>& rows, OutputFormat fmt) {
  if (fmt == OutputFormat::Json) {
    Json arr = Json::array();
    for (const auto& r : rows) arr.push_back(to_json(r));
    return arr.dump(2) + "\n";
  }
  std::ostringstream os;
  const Json header = to_json(Row{});
  bool first = true;
  for (const auto& [key, _] : header.items()) {
    os << (first ? "" : ",") << csv_quote(key);
    first = false;
  }
  os << "\n";
  for (const auto& r : rows) {
    first = true;
    const Json j = to_json(r);
    for (const auto& [key, value] : j.items()) {
      os << (first ? "" : ",") << csv_cell(value);
      first = false;
    }
    os << "\n";
  }
  return os.str();
}

template <class Row>
std::vector<Row> parse_rows(const std::string& text, OutputFormat fmt) {
  std::vector<Row> rows;
  try {
    if (fmt == OutputFormat::Json) {
      for (const auto& j : Json::parse(text)) {
        Row r{};
        from_json(j, r);
        rows.push_back(r);
      }
      return rows;
    }
    const auto records = csv_records(text);
    if (records.empty()) throw IoError("csv: missing header");
    const auto& header = records.front();
    for (std::size_t k = 1; k < records.size(); ++k) {
      if (records[k].size() != header.size()) throw IoError("csv: ragged record");
      Json j = Json::object();
      for (std::size_t c = 0; c < header.size(); ++c) {
        Json v = csv_value(records[k][c]);
        // Text columns keep their literal content even if it looks numeric.
        if (header[c] == "detail" || header[c] == "check" || header[c] == "variant")
          v = records[k][c];
        j[header[c]] = v;
      }
      Row r{};
      from_json(j, r);
      rows.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("parse_rows: ") + e.what());
  }
  return rows;
}

#define SEMICP_ROW_IO(Row)                                                     \
  template std::string format_rows<Row>(const std::vector<Row>&, OutputFormat); \
  template std::vector<Row> parse_rows<Row>(const std::string&, OutputFormat);
SEMICP_ROW_IO(SweepRow)
SEMICP_ROW_IO(MeanFieldRow)
SEMICP_ROW_IO(AuditRow)
SEMICP_ROW_IO(LumpingRow)
SEMICP_ROW_IO(AuxRow)
SEMICP_ROW_IO(OdeRow)
#undef SEMICP_ROW_IO

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace semicp
