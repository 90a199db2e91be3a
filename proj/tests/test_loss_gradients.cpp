// tests/test_loss_gradients.cpp

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "loss_grad_harness.hpp"

using namespace sasv;
using namespace sasv::testing;

// Quick per-loss sweep; the acceptance suite runs the full 100 points.
TEST_CASE("composite losses pass central-difference checks") {
  constexpr int kPoints = 10;
  constexpr double kTol = 1e-4;
  for (CompositeLoss which :
       {CompositeLoss::kCm, CompositeLoss::kAsvMasked, CompositeLoss::kTts,
        CompositeLoss::kVc, CompositeLoss::kTriplet,
        CompositeLoss::kSpoofSourceTriplet,
        CompositeLoss::kTotalNoAggregator, CompositeLoss::kTotalHeads}) {
    for (int i = 0; i < kPoints; ++i) {
      const double err =
          composite_grad_check(which, 5000 + static_cast<std::uint64_t>(i));
      INFO(composite_name(which) << " point " << i);
      CHECK(err < kTol);
    }
  }
}
