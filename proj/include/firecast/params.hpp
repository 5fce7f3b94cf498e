#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "firecast/tensor.hpp"

namespace firecast {

/// Named parameter tensors with matching gradient buffers. Iteration
/// order is insertion order and therefore deterministic for a fixed
/// build sequence.
template <class T>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor<T> value;
        Tensor<T> grad;
    };

    Tensor<T>& add(const std::string& name, Tensor<T> init) {
        if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
        Entry e;
        e.name = name;
        e.grad = Tensor<T>(init.shape);
        e.value = std::move(init);
        index_[name] = entries_.size();
        entries_.push_back(std::move(e));
        return entries_.back().value;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Tensor<T>& value(const std::string& name) { return entry(name).value; }
    const Tensor<T>& value(const std::string& name) const { return entry(name).value; }
    Tensor<T>& grad(const std::string& name) { return entry(name).grad; }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    std::size_t tensor_count() const { return entries_.size(); }

    /// Total number of scalar parameters.
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

    void zero_grads() {
        for (auto& e : entries_) e.grad.zero();
        grads_ready_ = false;
    }

    void mark_grads_ready() { grads_ready_ = true; }
    bool grads_ready() const { return grads_ready_; }

    static const char* dtype_name() { return sizeof(T) == 4 ? "f32" : "f64"; }

    /// Checkpoint: <base>.json manifest (names, shapes, dtype, byte
    /// offsets) plus <base>.bin blob, magic "WFCKPT01" then raw
    /// little-endian scalars in manifest order.
    void save(const std::string& base) const;
    static ParamStore<T> load(const std::string& base);

    /// Reads just the dtype string from a manifest, for precision dispatch.
    static std::string manifest_dtype(const std::string& base);

private:
    Entry& entry(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
        return entries_[it->second];
    }
    const Entry& entry(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
        return entries_[it->second];
    }

    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    bool grads_ready_ = false;
};

namespace detail {

constexpr char kCkptMagic[8] = {'W', 'F', 'C', 'K', 'P', 'T', '0', '1'};

template <class T>
void append_scalar_le(std::string& out, T v) {
    if constexpr (sizeof(T) == 4) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    } else {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

template <class T>
T read_scalar_le(const unsigned char* p) {
    if constexpr (sizeof(T) == 4) {
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        T v;
        std::memcpy(&v, &bits, 4);
        return v;
    } else {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        T v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
}

}  // namespace detail

template <class T>
void ParamStore<T>::save(const std::string& base) const {
    nlohmann::json manifest;
    manifest["magic"] = "WFCKPT01";
    manifest["dtype"] = dtype_name();
    nlohmann::json tensors = nlohmann::json::array();

    std::string blob;
    blob.append(detail::kCkptMagic, 8);
    for (const auto& e : entries_) {
        nlohmann::json t;
        t["name"] = e.name;
        t["shape"] = e.value.shape;
        t["count"] = e.value.size();
        t["offset"] = blob.size();
        tensors.push_back(std::move(t));
        for (const T& v : e.value.data) detail::append_scalar_le(blob, v);
    }
    manifest["tensors"] = std::move(tensors);

    {
        std::ofstream out(base + ".bin", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot open " + base + ".bin");
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw std::runtime_error("checkpoint: short write to " + base + ".bin");
    }
    std::ofstream jout(base + ".json", std::ios::binary | std::ios::trunc);
    if (!jout) throw std::runtime_error("checkpoint: cannot open " + base + ".json");
    jout << manifest.dump(2) << "\n";
}

template <class T>
std::string ParamStore<T>::manifest_dtype(const std::string& base) {
    std::ifstream jin(base + ".json");
    if (!jin) throw std::runtime_error("checkpoint: cannot open " + base + ".json");
    nlohmann::json manifest;
    jin >> manifest;
    if (!manifest.contains("magic") || manifest.at("magic") != "WFCKPT01")
        throw std::runtime_error("checkpoint: bad magic in " + base + ".json");
    return manifest.at("dtype").get<std::string>();
}

template <class T>
ParamStore<T> ParamStore<T>::load(const std::string& base) {
    std::ifstream jin(base + ".json");
    if (!jin) throw std::runtime_error("checkpoint: cannot open " + base + ".json");
    nlohmann::json manifest;
    try {
        jin >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint: unparseable manifest " + base + ".json: " + e.what());
    }
    if (!manifest.contains("magic") || manifest.at("magic") != "WFCKPT01")
        throw std::runtime_error("checkpoint: bad magic in " + base + ".json");
    const std::string dtype = manifest.at("dtype").get<std::string>();
    if (dtype != dtype_name())
        throw std::runtime_error("checkpoint: dtype " + dtype + " does not match requested " +
                                 dtype_name());

    std::ifstream in(base + ".bin", std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + base + ".bin");
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (blob.size() < 8 || std::memcmp(blob.data(), detail::kCkptMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + base + ".bin");

    ParamStore<T> store;
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
    for (const auto& t : manifest.at("tensors")) {
        const auto name = t.at("name").get<std::string>();
        const auto shape = t.at("shape").get<std::vector<std::size_t>>();
        const auto count = t.at("count").get<std::size_t>();
        const auto offset = t.at("offset").get<std::size_t>();
        Tensor<T> val(shape);
        if (val.size() != count)
            throw std::runtime_error("checkpoint: count mismatch for tensor " + name);
        if (offset + count * sizeof(T) > blob.size())
            throw std::runtime_error("checkpoint: blob too short for tensor " + name);
        for (std::size_t i = 0; i < count; ++i)
            val.data[i] = detail::read_scalar_le<T>(p + offset + i * sizeof(T));
        store.add(name, std::move(val));
    }
    return store;
}

}  // namespace firecast
