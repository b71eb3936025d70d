#include "spacefusion/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spacefusion/errors.hpp"

namespace spacefusion {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for write: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

KvFile KvFile::parse(const std::string& text, const std::string& origin) {
    KvFile kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError(origin + ":" + std::to_string(lineno) +
                            ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        if (key.empty())
            throw DataError(origin + ":" + std::to_string(lineno) +
                            ": empty key");
        if (kv.has(key))
            throw DataError(origin + ":" + std::to_string(lineno) +
                            ": duplicate key '" + key + "'");
        kv.entries_.emplace_back(key, line.substr(eq + 1));
    }
    return kv;
}

KvFile KvFile::load(const std::string& path) {
    return parse(read_file(path), path);
}

bool KvFile::has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return true;
    return false;
}

const std::string& KvFile::get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    throw DataError("missing key: " + key);
}

std::string KvFile::get_or(const std::string& key,
                           const std::string& fallback) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return fallback;
}

double KvFile::get_double(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("key '" + key + "': bad number '" + s + "'");
    }
}

std::uint64_t KvFile::get_uint(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(s, &pos);
        if (pos != s.size() || s[0] == '-') throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("key '" + key + "': bad unsigned integer '" + s + "'");
    }
}

bool KvFile::get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true") return true;
    if (s == "false") return false;
    throw DataError("key '" + key + "': expected true or false, got '" + s + "'");
}

void KvFile::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void KvFile::set_double(const std::string& key, double value) {
    set(key, format_double(value));
}

void KvFile::set_uint(const std::string& key, std::uint64_t value) {
    set(key, std::to_string(value));
}

void KvFile::set_bool(const std::string& key, bool value) {
    set(key, value ? "true" : "false");
}

std::string KvFile::serialize() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

}  // namespace spacefusion
