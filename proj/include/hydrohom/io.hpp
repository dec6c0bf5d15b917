////////////////////////////////////////////////////////////////////////////////
// io.hpp
////////////////////////////////////////////////////////////////////////////////
// Result serialization. Binary fields are flat little-endian 64-bit floats in
// storage order (component planes, each row-major) with a JSON sidecar
// describing {dim, shape, lengths, m, field}; 1D fields can also go to CSV.
// All floating-point text output is printed with 17 significant digits so
// values round-trip exactly, and files are written atomically (temp + rename)
// so interrupted runs leave no partial outputs.
//
// JSON output is emitted by a tiny writer with fixed key order; the vendored
// parser is used only for reading.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_IO_HPP
#define HYDROHOM_IO_HPP

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hydrohom/experiments.hpp"

namespace hydrohom {
namespace io {

static_assert(std::endian::native == std::endian::little,
              "field files are little endian; add byte swapping for this platform");

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Minimal ordered JSON writer.
class JsonWriter {
  public:
    std::string str() const { return out_.str(); }

    void begin_object() {
        sep();
        out_ << "{";
        first_ = true;
    }
    void end_object() {
        out_ << "}";
        first_ = false;
    }
    void begin_array(const std::string& key = {}) {
        if (!key.empty()) this->key(key);
        sep();
        out_ << "[";
        first_ = true;
    }
    void end_array() {
        out_ << "]";
        first_ = false;
    }
    void key(const std::string& k) {
        sep();
        out_ << '"' << k << "\":";
        first_ = true; // suppress the comma before the value
    }
    void value(double v) {
        sep();
        out_ << fmt17(v);
    }
    void value(int v) {
        sep();
        out_ << v;
    }
    void value(std::size_t v) {
        sep();
        out_ << v;
    }
    void value(bool v) {
        sep();
        out_ << (v ? "true" : "false");
    }
    void value(const std::string& s) {
        sep();
        out_ << '"' << s << '"';
    }
    void value(const char* s) { value(std::string(s)); }

    template <typename T>
    void kv(const std::string& k, const T& v) {
        key(k);
        value(v);
    }
    void kv(const std::string& k, const std::vector<double>& v) {
        begin_array(k);
        for (double x : v) value(x);
        end_array();
    }

  private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
    }
    std::ostringstream out_;
    bool first_ = true;
};

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

////////////////////////////////////////////////////////////////////////////////
// Fields
////////////////////////////////////////////////////////////////////////////////

inline void write_field(const std::filesystem::path& base, const FieldArray& f,
                        const std::string& name, int m) {
    std::string raw(reinterpret_cast<const char*>(f.data.data()),
                    f.data.size() * sizeof(double));
    write_atomic(base.string() + ".bin", raw);

    JsonWriter w;
    w.begin_object();
    w.kv("dim", f.grid.dim);
    w.begin_array("shape");
    if (f.comps != 1) w.value(f.comps);
    w.value(f.grid.n[0]);
    if (f.grid.dim == 2) w.value(f.grid.n[1]);
    w.end_array();
    w.begin_array("lengths");
    for (int ax = 0; ax < f.grid.dim; ++ax) w.value(f.grid.length[ax]);
    w.end_array();
    w.kv("m", m);
    w.kv("field", name);
    w.kv("bc", to_string(f.grid.bc));
    w.begin_array("origin");
    for (int ax = 0; ax < f.grid.dim; ++ax) w.value(f.grid.origin[ax]);
    w.end_array();
    w.end_object();
    write_atomic(base.string() + ".json", w.str() + "\n");
}

struct LoadedField {
    FieldArray field;
    std::string name;
    int m = 0;
};

inline LoadedField read_field(const std::filesystem::path& base) {
    std::ifstream hj(base.string() + ".json");
    if (!hj) throw Error("missing header " + base.string() + ".json");
    nlohmann::json h = nlohmann::json::parse(hj);

    const int dim = h.at("dim").get<int>();
    std::vector<int> shape = h.at("shape").get<std::vector<int>>();
    std::vector<double> lengths = h.at("lengths").get<std::vector<double>>();
    int comps = 1;
    std::array<int, 2> n{4, 1};
    if (static_cast<int>(shape.size()) == dim) {
        n[0] = shape[0];
        if (dim == 2) n[1] = shape[1];
    } else {
        comps = shape[0];
        n[0] = shape[1];
        if (dim == 2) n[1] = shape[2];
    }
    Bc bc = Bc::periodic;
    if (h.contains("bc")) {
        const std::string s = h["bc"].get<std::string>();
        bc = (s == "dirichlet") ? Bc::dirichlet : (s == "natural") ? Bc::natural : Bc::periodic;
    }
    std::array<double, 2> len{1.0, 1.0}, origin{0.0, 0.0};
    for (std::size_t i = 0; i < lengths.size() && i < 2; ++i) len[i] = lengths[i];
    if (h.contains("origin")) {
        auto o = h["origin"].get<std::vector<double>>();
        for (std::size_t i = 0; i < o.size() && i < 2; ++i) origin[i] = o[i];
    }

    LoadedField out;
    out.field = FieldArray(Grid(dim, n, bc, len, origin), comps);
    out.name = h.at("field").get<std::string>();
    out.m = h.at("m").get<int>();

    std::ifstream fb(base.string() + ".bin", std::ios::binary);
    if (!fb) throw Error("missing data " + base.string() + ".bin");
    fb.read(reinterpret_cast<char*>(out.field.data.data()),
            static_cast<std::streamsize>(out.field.data.size() * sizeof(double)));
    if (fb.gcount() != static_cast<std::streamsize>(out.field.data.size() * sizeof(double)))
        throw Error("field data truncated: " + base.string() + ".bin");
    return out;
}

// CSV export for one-dimensional fields: x, then one column per component.
inline void write_field_csv(const std::filesystem::path& path, const FieldArray& f) {
    if (f.grid.dim != 1) throw DimensionMismatch("CSV export is for 1D fields");
    std::ostringstream s;
    s << "x";
    for (int c = 0; c < f.comps; ++c) s << ",v" << c;
    s << "\n";
    for (int i = 0; i < f.grid.n[0]; ++i) {
        s << fmt17(f.grid.coord(0, i));
        for (int c = 0; c < f.comps; ++c) s << "," << fmt17(f.at(c, f.grid.index(i)));
        s << "\n";
    }
    write_atomic(path, s.str());
}

////////////////////////////////////////////////////////////////////////////////
// Tensors and studies
////////////////////////////////////////////////////////////////////////////////

inline std::string tensor_json(const EffectiveTensor& T) {
    JsonWriter w;
    w.begin_object();
    w.kv("kind", to_string(T.kind));
    w.kv("bc", to_string(T.bc));
    w.kv("dim", T.dim);
    w.kv("m", T.m);
    w.kv("grid", T.grid_desc);
    w.begin_array("matrix");
    for (int i = 0; i < T.mat.rows(); ++i)
        for (int j = 0; j < T.mat.cols(); ++j) w.value(T.mat(i, j));
    w.end_array();
    w.kv("residuals", T.residuals);
    w.kv("min_eigenvalue", T.min_eigenvalue);
    w.kv("positive_definite", T.positive_definite);
    w.end_object();
    return w.str() + "\n";
}

inline void write_tensor(const std::filesystem::path& path, const EffectiveTensor& T) {
    write_atomic(path, tensor_json(T));
}

inline void write_tensor_csv(const std::filesystem::path& path, const EffectiveTensor& T) {
    std::ostringstream s;
    s << "i,j,value\n";
    for (int i = 0; i < T.mat.rows(); ++i)
        for (int j = 0; j < T.mat.cols(); ++j)
            s << i << "," << j << "," << fmt17(T.mat(i, j)) << "\n";
    write_atomic(path, s.str());
}

inline void write_study_csv(const std::filesystem::path& path, const StudyResult& res) {
    std::ostringstream s;
    for (std::size_t i = 0; i < res.columns.size(); ++i)
        s << (i ? "," : "") << res.columns[i];
    s << "\n";
    for (const auto& row : res.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s << (i ? "," : "") << fmt17(row[i]);
        s << "\n";
    }
    write_atomic(path, s.str());
}

inline std::string study_json(const StudyResult& res) {
    JsonWriter w;
    w.begin_object();
    w.key("summary");
    w.begin_object();
    for (const auto& [k, v] : res.summary) w.kv(k, v);
    w.end_object();
    w.key("flags");
    w.begin_object();
    for (const auto& [k, v] : res.flags) w.kv(k, v);
    w.end_object();
    w.kv("passed", res.passed());
    w.end_object();
    return w.str() + "\n";
}

} // namespace io
} // namespace hydrohom

#endif
