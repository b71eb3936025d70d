#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spacefusion {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// FNV-1a over raw bytes, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// key=value text, one pair per line. Blank lines and lines starting with '#'
// are ignored. Keys must be unique. Order of insertion is preserved so the
// same structure serializes the checkpoint manifest and CLI config files.
class KvFile {
public:
    KvFile() = default;

    static KvFile parse(const std::string& text, const std::string& origin);
    static KvFile load(const std::string& path);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;

    // Typed getters throw DataError naming the key on malformed values.
    double get_double(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    bool get_bool(const std::string& key) const;  // true/false

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);  // %.17g
    void set_uint(const std::string& key, std::uint64_t value);
    void set_bool(const std::string& key, bool value);

    std::string serialize() const;
    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double v);  // %.17g, round-trip exact

}  // namespace spacefusion
