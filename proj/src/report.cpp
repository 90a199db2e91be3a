// src/report.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sasv/report.hpp"

#include <cstdio>

#include "sasv/error.hpp"

namespace sasv {

std::string report_table(
    const std::vector<std::pair<std::string, MetricSuite>>& rows) {
  detail::require(!rows.empty(), "report_table: no rows");
  std::string out = "| Configuration | SASV | SV | SPF |\n|---|---|---|---|\n";
  char buf[160];
  for (const auto& [name, suite] : rows) {
    detail::require(!name.empty(), "report_table: empty configuration name");
    std::snprintf(buf, sizeof(buf), "| %s | %.2f | %.2f | %.2f |\n",
                  name.c_str(), 100.0 * suite.sasv_eer, 100.0 * suite.sv_eer,
                  100.0 * suite.spf_eer);
    out += buf;
  }
  return out;
}

}  // namespace sasv
