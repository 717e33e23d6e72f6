#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "rbl/errors.hpp"
#include "rbl/harness.hpp"
#include "rbl/io.hpp"

namespace rbl::harness {

using nlohmann::json;

namespace {

constexpr const char* kCsvHeader =
    "scenario,variant,dim,sensors,sigma,missing_fraction,translation_rmse,translation_se,rotation_rmse,rotation_se,"
    "failures,trials";

// JSON has no NaN; an empty row (every trial failed) is written as null.
json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j, const char* key) {
  const json& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

} // namespace

OutputFormat output_format_from_string(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  if (name == "plot-data") return OutputFormat::PlotData;
  throw ConfigError("format: expected csv, json or plot-data, got '" + std::string(name) + "'");
}

std::string to_csv(const ResultTable& table) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  const std::string scenario(to_string(table.scenario));
  for (const ResultRow& r : table.rows) {
    out << scenario << ',' << r.variant << ',' << r.dim << ',' << r.sensors << ',' << io::format_double(r.sigma)
        << ',' << io::format_double(r.missing_fraction) << ',' << io::format_double(r.translation_rmse) << ','
        << io::format_double(r.translation_se) << ',' << io::format_double(r.rotation_rmse) << ','
        << io::format_double(r.rotation_se) << ',' << r.failures << ',' << r.trials << '\n';
  }
  return out.str();
}

json to_json(const ResultTable& table) {
  json rows = json::array();
  for (const ResultRow& r : table.rows) {
    rows.push_back({{"variant", r.variant},
                    {"dim", r.dim},
                    {"sensors", r.sensors},
                    {"sigma", r.sigma},
                    {"missing_fraction", r.missing_fraction},
                    {"translation_rmse", number_or_null(r.translation_rmse)},
                    {"translation_se", number_or_null(r.translation_se)},
                    {"rotation_rmse", number_or_null(r.rotation_rmse)},
                    {"rotation_se", number_or_null(r.rotation_se)},
                    {"failures", r.failures},
                    {"trials", r.trials},
                    {"wall_time_s", r.wall_time_s}});
  }
  return json{{"scenario", std::string(to_string(table.scenario))}, {"rows", rows}};
}

ResultTable result_table_from_json(const json& j) {
  ResultTable table;
  try {
    table.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    for (const json& r : j.at("rows")) {
      ResultRow row;
      row.variant = r.at("variant").get<std::string>();
      row.dim = r.at("dim").get<int>();
      row.sensors = r.at("sensors").get<int>();
      row.sigma = r.at("sigma").get<double>();
      row.missing_fraction = r.at("missing_fraction").get<double>();
      row.translation_rmse = number_from(r, "translation_rmse");
      row.translation_se = number_from(r, "translation_se");
      row.rotation_rmse = number_from(r, "rotation_rmse");
      row.rotation_se = number_from(r, "rotation_se");
      row.failures = r.at("failures").get<int>();
      row.trials = r.at("trials").get<int>();
      row.wall_time_s = r.value("wall_time_s", 0.0);
      table.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("result table: ") + e.what());
  }
  return table;
}

std::vector<PlotSeries> to_plot_data(const ResultTable& table) {
  const bool by_noise = table.scenario == Scenario::RmseVsNoise;
  std::set<std::string> variants;
  for (const ResultRow& r : table.rows) variants.insert(r.variant);
  const bool label_variant = variants.size() > 1;

  std::vector<PlotSeries> out;
  for (const std::string metric : {"translation_rmse", "rotation_rmse"}) {
    std::ostringstream csv;
    csv << "x,y,series\n";
    for (const ResultRow& r : table.rows) {
      const double y = metric == "translation_rmse" ? r.translation_rmse : r.rotation_rmse;
      std::string series = by_noise ? "K=" + std::to_string(r.sensors) : "sigma=" + io::format_double(r.sigma);
      if (label_variant) series = r.variant + " " + series;
      if (by_noise)
        csv << io::format_double(r.sigma);
      else
        csv << r.sensors;
      csv << ',' << io::format_double(y) << ',' << series << '\n';
    }
    out.push_back({metric, csv.str()});
  }
  return out;
}

std::vector<std::filesystem::path> emit_results(const ResultTable& table, OutputFormat format,
                                                const std::filesystem::path& out_dir) {
  if (table.rows.empty()) throw InvalidArgument("result table is empty");
  const std::string stem(to_string(table.scenario));
  std::vector<std::filesystem::path> written;
  switch (format) {
  case OutputFormat::Csv:
    written.push_back(out_dir / (stem + ".csv"));
    io::write_text(written.back(), to_csv(table));
    break;
  case OutputFormat::Json:
    written.push_back(out_dir / (stem + ".json"));
    io::write_text(written.back(), to_json(table).dump(2) + "\n");
    break;
  case OutputFormat::PlotData:
    for (const PlotSeries& s : to_plot_data(table)) {
      written.push_back(out_dir / (stem + "_" + s.metric + ".csv"));
      io::write_text(written.back(), s.csv);
    }
    break;
  }
  return written;
}

} // namespace rbl::harness
