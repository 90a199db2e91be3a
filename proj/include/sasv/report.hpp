// sasv/report.hpp

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

#ifndef SASV_REPORT_HPP_
#define SASV_REPORT_HPP_

#include <string>
#include <utility>
#include <vector>

#include "sasv/metrics.hpp"

namespace sasv {

// Markdown table with columns Configuration | SASV | SV | SPF; error rates
// are rendered in percent with two decimals.
std::string report_table(
    const std::vector<std::pair<std::string, MetricSuite>>& rows);

}  // namespace sasv

#endif  // SASV_REPORT_HPP_
