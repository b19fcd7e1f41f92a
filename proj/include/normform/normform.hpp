/*
 Copyright 2026 The normform Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef NORMFORM_NORMFORM_HPP
#define NORMFORM_NORMFORM_HPP

#include "normform/analysis.hpp"
#include "normform/config.hpp"
#include "normform/container.hpp"
#include "normform/core.hpp"
#include "normform/dataset.hpp"
#include "normform/integrate.hpp"
#include "normform/io.hpp"
#include "normform/mlp.hpp"
#include "normform/nf_autoencoder.hpp"
#include "normform/normal_forms.hpp"
#include "normform/pod.hpp"
#include "normform/systems.hpp"

#endif  // NORMFORM_NORMFORM_HPP
