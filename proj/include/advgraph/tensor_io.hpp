#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace advgraph {

struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    size_t element_count() const {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return n;
    }
};

// Versioned text table of named tensors plus string metadata. Values are
// written with 17 significant digits, so save/load round-trips binary64
// bit-exactly. Tensor order is preserved; meta keys are sorted.
struct TensorFile {
    std::map<std::string, std::vector<std::string>> meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;
};

std::string tensor_file_serialize(const TensorFile& tf);
TensorFile tensor_file_parse(const std::string& text, const std::string& context);

void save_tensor_file(const TensorFile& tf, const std::string& path);
TensorFile load_tensor_file(const std::string& path);

} // namespace advgraph
