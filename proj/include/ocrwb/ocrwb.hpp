/**********************************************************************
 * File:        ocrwb.hpp
 * Description: Umbrella header.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 **********************************************************************/

#pragma once

#include "ocrwb/components.hpp"
#include "ocrwb/dataset.hpp"
#include "ocrwb/engine_config.hpp"
#include "ocrwb/error.hpp"
#include "ocrwb/external_engine.hpp"
#include "ocrwb/formkit.hpp"
#include "ocrwb/imaging.hpp"
#include "ocrwb/metrics.hpp"
#include "ocrwb/png_io.hpp"
#include "ocrwb/raster.hpp"
#include "ocrwb/reference_engine.hpp"
#include "ocrwb/report.hpp"
#include "ocrwb/review_service.hpp"
#include "ocrwb/rng.hpp"
#include "ocrwb/synth.hpp"
#include "ocrwb/textnorm.hpp"
#include "ocrwb/utf8.hpp"
