#include "wavecor/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

namespace {

constexpr const char* kReportHeader = "model,DSC,Sensitivity,Precision,HD95_mm";

std::string fixed6(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fixed6(const std::optional<double>& v) { return v ? fixed6(*v) : "nan"; }

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, size_t line, const char* column) {
  if (s == "nan") return std::nan("");
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("report line " + std::to_string(line) + ", column " + column + ": not a number: '" + s + "'");
}

}  // namespace

ReportRow report_row(const std::string& model, const MetricSummary& s) {
  return {model, s.dsc, s.sensitivity, s.precision, s.hd95_mm};
}

ReportRow report_row(const std::string& model, const SegMetrics& m) {
  return {model, m.dsc, m.sensitivity, m.precision, m.hd95_mm};
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rows) {
    if (r.model.find_first_of(",\n") != std::string::npos) {
      throw ValidationError("report: model name '" + r.model + "' contains a comma or newline");
    }
    out += r.model + "," + fixed6(r.dsc) + "," + fixed6(r.sensitivity) + "," + fixed6(r.precision) + "," +
           fixed6(r.hd95_mm) + "\n";
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw ValidationError(std::string("report header: expected '") + kReportHeader + "'");
  }
  std::vector<ReportRow> rows;
  size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 5) {
      throw ValidationError("report line " + std::to_string(n) + ": expected 5 columns, got " +
                            std::to_string(cells.size()));
    }
    ReportRow r;
    r.model = cells[0];
    r.dsc = parse_number(cells[1], n, "DSC");
    r.sensitivity = parse_number(cells[2], n, "Sensitivity");
    r.precision = parse_number(cells[3], n, "Precision");
    const double hd = parse_number(cells[4], n, "HD95_mm");
    if (!std::isnan(hd)) r.hd95_mm = hd;
    rows.push_back(std::move(r));
  }
  return rows;
}

Json report_json(const std::vector<ReportRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back(Json{{"model", r.model},
                       {"DSC", r.dsc},
                       {"Sensitivity", r.sensitivity},
                       {"Precision", r.precision},
                       {"HD95_mm", r.hd95_mm ? Json(*r.hd95_mm) : Json()}});
  }
  return arr;
}

void save_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  write_text_file(path, report_csv(rows));
}

void save_report_json(const std::string& path, const std::vector<ReportRow>& rows) {
  write_json_file(path, report_json(rows));
}

std::vector<ReportRow> load_report_csv(const std::string& path) { return parse_report_csv(read_text_file(path)); }

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "model,MPE,RFE,MSFF,WT/IWT,DSC,Sensitivity,Precision,HD95\n";
  for (const auto& r : rows) {
    const NetworkConfig& c = r.config;
    out += r.model + "," + yes_no(c.use_mpe) + "," + yes_no(c.use_rfe) + "," + yes_no(c.use_msff) + "," +
           yes_no(c.use_wt_iwt) + "," + fixed6(r.test.dsc) + "," + fixed6(r.test.sensitivity) + "," +
           fixed6(r.test.precision) + "," + fixed6(r.test.hd95_mm) + "\n";
  }
  return out;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,lr,train_loss,val_dsc\n";
  char buf[160];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", e.epoch, e.lr, e.train_loss, e.val_dsc);
    out += buf;
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("error while writing '" + path + "'");
}

WAVECOR_END_NAMESPACE
