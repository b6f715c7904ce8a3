#pragma once

#include <string>
#include <vector>

#include "ukgen/errors.hpp"

namespace ukgen {

// GEMM shapes produced by the im2row transform on ResNet50 v1.5 and VGG16
// convolution layers at batch size 1, plus the square benchmark sizes. The
// same tables ship as plain text under data/ for external tooling; these are
// the canonical values.

struct LayerShape {
  int id;
  long long m, n, k;
};

inline const std::vector<LayerShape>& resnet50_layers() {
  static const std::vector<LayerShape> layers = {
      {1, 12544, 64, 147},  {2, 3136, 64, 64},    {3, 3136, 64, 576},
      {4, 3136, 256, 64},   {5, 3136, 64, 256},   {6, 3136, 128, 256},
      {7, 784, 128, 1152},  {8, 784, 512, 128},   {9, 784, 512, 256},
      {10, 784, 128, 512},  {11, 784, 256, 512},  {12, 196, 256, 2304},
      {13, 196, 1024, 256}, {14, 196, 1024, 512}, {15, 196, 256, 1024},
      {16, 196, 512, 1024}, {17, 49, 512, 4608},  {18, 49, 2048, 512},
      {19, 49, 2048, 1024}, {20, 49, 512, 2048},
  };
  return layers;
}

inline const std::vector<LayerShape>& vgg16_layers() {
  static const std::vector<LayerShape> layers = {
      {1, 50176, 64, 27},   {2, 50176, 64, 576},  {3, 12544, 128, 576},
      {4, 12544, 128, 1152}, {5, 3136, 256, 1152}, {6, 3136, 256, 2304},
      {7, 784, 256, 2304},  {8, 784, 512, 4608},  {9, 196, 512, 4608},
  };
  return layers;
}

inline std::vector<long long> square_sizes() { return {1000, 2000, 4000, 5000}; }

inline const std::vector<LayerShape>& model_layers(const std::string& model) {
  if (model == "resnet50") return resnet50_layers();
  if (model == "vgg16") return vgg16_layers();
  fail(ErrKind::ValidationError, "unknown model '" + model + "' (resnet50 or vgg16)");
}

// one layer per line: id m n k
inline std::string dataset_to_text(const std::vector<LayerShape>& layers) {
  std::string out = "# layer_id m n k\n";
  for (const auto& l : layers)
    out += std::to_string(l.id) + " " + std::to_string(l.m) + " " + std::to_string(l.n) + " " +
           std::to_string(l.k) + "\n";
  return out;
}

inline std::vector<LayerShape> parse_dataset(const std::string& text) {
  std::vector<LayerShape> out;
  size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    size_t at = line.find_first_not_of(" \t\r");
    if (at == std::string::npos || line[at] == '#') {
      if (end == text.size()) break;
      continue;
    }
    LayerShape l;
    if (sscanf(line.c_str(), "%d %lld %lld %lld", &l.id, &l.m, &l.n, &l.k) != 4)
      fail(ErrKind::ParseError,
           "dataset line " + std::to_string(line_no) + ": expected 'id m n k'");
    out.push_back(l);
    if (end == text.size()) break;
  }
  return out;
}

}  // namespace ukgen
