#include "advgraph/tensor_io.hpp"

#include "advgraph/common.hpp"
#include "advgraph/io.hpp"

namespace advgraph {

const Tensor& TensorFile::get(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    fail("tensor '", name, "' not found");
}

bool TensorFile::has(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return true;
    return false;
}

std::string tensor_file_serialize(const TensorFile& tf) {
    std::string out = "ADVTENSORS 1\n";
    for (const auto& [key, values] : tf.meta) {
        out += "meta " + key;
        for (const auto& v : values) out += " " + v;
        out += '\n';
    }
    for (const auto& [name, t] : tf.tensors) {
        out += "tensor " + name + " " + std::to_string(t.shape.size());
        for (size_t d : t.shape) out += " " + std::to_string(d);
        out += '\n';
        require(t.data.size() == t.element_count(), "tensor '", name, "' shape/data mismatch");
        for (size_t i = 0; i < t.data.size(); ++i) {
            if (i) out += ' ';
            out += format_double(t.data[i]);
        }
        out += '\n';
    }
    return out;
}

TensorFile tensor_file_parse(const std::string& text, const std::string& context) {
    TensorFile tf;
    auto lines = split_lines(text);
    require(!lines.empty() && lines[0] == "ADVTENSORS 1",
            "bad tensor file header in ", context);
    size_t i = 1;
    while (i < lines.size()) {
        const std::string& line = lines[i];
        const std::string where = context + ":" + std::to_string(i + 1);
        if (line.empty()) {
            ++i;
            continue;
        }
        auto fields = split_fields(line, ' ');
        if (fields[0] == "meta") {
            require(fields.size() >= 2, "malformed meta line at ", where);
            tf.meta[fields[1]] = std::vector<std::string>(fields.begin() + 2, fields.end());
            ++i;
        } else if (fields[0] == "tensor") {
            require(fields.size() >= 3, "malformed tensor line at ", where);
            Tensor t;
            size_t rank = static_cast<size_t>(parse_int(fields[2], where));
            require(fields.size() == 3 + rank, "tensor rank/dims mismatch at ", where);
            for (size_t k = 0; k < rank; ++k)
                t.shape.push_back(static_cast<size_t>(parse_int(fields[3 + k], where)));
            require(i + 1 < lines.size(), "missing tensor data at ", where);
            auto values = split_fields(lines[i + 1], ' ');
            require(values.size() == t.element_count(),
                    "tensor '", fields[1], "' expects ", t.element_count(), " values, got ",
                    values.size(), " at ", where);
            t.data.reserve(values.size());
            for (const auto& v : values) t.data.push_back(parse_double(v, where));
            tf.tensors.emplace_back(fields[1], std::move(t));
            i += 2;
        } else {
            fail("unknown record '", fields[0], "' at ", where);
        }
    }
    return tf;
}

void save_tensor_file(const TensorFile& tf, const std::string& path) {
    write_file(path, tensor_file_serialize(tf));
}

TensorFile load_tensor_file(const std::string& path) {
    return tensor_file_parse(read_file(path), path);
}

} // namespace advgraph
