/* Copyright 2026 The ovpl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include "ovpl/annotations.hpp"
#include "ovpl/image.hpp"

namespace ovpl {

enum class CropMode { kSoft, kHard, kRaw };

// round(0.114*B + 0.587*G + 0.299*R) replicated to all three channels.
ImageBuffer grayscale(const ImageBuffer& img);

// Separable Gaussian convolution with reflect-101 borders. sigma <= 0 derives
// the kernel width from ksize: 0.3*((ksize-1)*0.5 - 1) + 0.8. ksize must be
// odd and >= 1.
ImageBuffer gaussian_blur(const ImageBuffer& img, int ksize, double sigma);

// The crop variants feed the model; each returns a buffer sized to `box`.
// Soft: mask interior verbatim, remainder grayscale + blur of the full frame.
ImageBuffer soft_mask_crop(const ImageBuffer& img, const BBox& box,
                           const InstanceMask& mask, int ksize, double sigma);
// Hard: mask interior verbatim, remainder black.
ImageBuffer hard_mask_crop(const ImageBuffer& img, const BBox& box,
                           const InstanceMask& mask);
// Raw: verbatim crop.
ImageBuffer raw_box_crop(const ImageBuffer& img, const BBox& box);

}  // namespace ovpl
