#pragma once

#include <string>
#include <vector>

#include "wavecor/config_io.hpp"
#include "wavecor/metrics.hpp"
#include "wavecor/trainer.hpp"

WAVECOR_BEGIN_NAMESPACE

struct ReportRow {
  std::string model;
  double dsc = 0.0, sensitivity = 0.0, precision = 0.0;
  std::optional<double> hd95_mm;

  bool operator==(const ReportRow&) const = default;
};

ReportRow report_row(const std::string& model, const MetricSummary& s);
ReportRow report_row(const std::string& model, const SegMetrics& m);

/// Header model,DSC,Sensitivity,Precision,HD95_mm; six decimals; "nan" for
/// an undefined HD95.
std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report_csv(const std::string& text);
Json report_json(const std::vector<ReportRow>& rows);

void save_report_csv(const std::string& path, const std::vector<ReportRow>& rows);
void save_report_json(const std::string& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> load_report_csv(const std::string& path);

/// model,MPE,RFE,MSFF,WT/IWT,DSC,Sensitivity,Precision,HD95 with yes/no toggles.
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// epoch,lr,train_loss,val_dsc
std::string history_csv(const std::vector<EpochRecord>& history);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

WAVECOR_END_NAMESPACE
