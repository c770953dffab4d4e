// Copyright 2026 The privdet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>

#include "privdet/relations.hpp"

int main() {
  using namespace privdet;
  for (const auto& r : relation_table(1, 200)) {
    std::printf("%-16s -> %-16s  %-14s %s\n", r.from.c_str(), r.to.c_str(),
                r.bound_constant.c_str(), r.verdict.c_str());
  }
}
