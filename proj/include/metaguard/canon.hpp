// canon.hpp: canonical text encoding for every file this pipeline emits.
//
// Canonical form: one JSON object per line, keys in lexicographic order,
// floating-point numbers rendered with at most 6 significant digits.
// Re-encoding a parsed canonical line reproduces it byte for byte, which is
// what the round-trip and determinism tests check.

#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace mg::canon {

// 6-significant-digit rendering. Integral values print without a decimal
// point ("1", "90"), everything else as the shortest %.6g form.
inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string quote(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char esc[8];
                std::snprintf(esc, sizeof(esc), "\\u%04x", c);
                out += esc;
            } else {
                out.push_back(c);
            }
        }
    }
    out.push_back('"');
    return out;
}

// Incremental writer for one canonical JSON object. The caller is
// responsible for emitting fields in key order.
class ObjectWriter {
public:
    ObjectWriter() { out_.push_back('{'); }

    void raw(const std::string& key, const std::string& json_value) {
        if (!first_) out_.push_back(',');
        first_ = false;
        out_ += quote(key);
        out_.push_back(':');
        out_ += json_value;
    }

    void field(const std::string& key, double v) { raw(key, num(v)); }
    void field(const std::string& key, int v) { raw(key, std::to_string(v)); }
    void field(const std::string& key, std::size_t v) { raw(key, std::to_string(v)); }
    void field(const std::string& key, bool v) { raw(key, v ? "true" : "false"); }
    void field(const std::string& key, const std::string& v) { raw(key, quote(v)); }
    void field(const std::string& key, const char* v) { raw(key, quote(v)); }

    std::string finish() {
        out_.push_back('}');
        return out_;
    }

private:
    std::string out_;
    bool first_ = true;
};

inline std::string array_of_nums(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(',');
        out += num(v[i]);
    }
    out.push_back(']');
    return out;
}

} // namespace mg::canon
