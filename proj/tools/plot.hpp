// Copyright 2026 The dvsmc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dvsmc/eval/metrics.hpp"

namespace dvsmc::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> low;
  std::vector<double> high;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

enum class Metric { kTrackingError, kLikelihood, kKl, kElbo };
std::string to_string(Metric metric);

// One series per method, ordered as the methods first appear in the report.
std::vector<Series> collect_series(const eval::EvalReport& report, Metric metric);

// Columns: method,condition,mean,ci_low,ci_high.
void write_series_csv(const std::vector<Series>& series, const std::filesystem::path& path);

// Panels side by side, each with error bars and a legend.
std::string render_svg(const std::vector<Panel>& panels);

struct PlotFiles {
  std::vector<std::filesystem::path> written;
};

// Error vs sigma_v from the noise report, error vs P and the ELBO
// decomposition from the partial report. Either report may be null.
PlotFiles write_plots(const eval::EvalReport* noise, const eval::EvalReport* partial,
                      const std::filesystem::path& dir);

}  // namespace dvsmc::cli
