#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace fgmopt {

/// Self-describing text container of named integer, real and string fields.
/// Reals are written as hexadecimal floats so a save/load round trip is
/// bit-exact.
class Archive {
public:
    using Ints = std::vector<long long>;
    using Reals = std::vector<double>;
    using Value = std::variant<Ints, Reals, std::string>;

    void put(const std::string& name, Ints values);
    void put(const std::string& name, Reals values);
    void put(const std::string& name, std::string value);

    bool contains(const std::string& name) const;
    const Ints& ints(const std::string& name) const;
    const Reals& reals(const std::string& name) const;
    const std::string& text(const std::string& name) const;

    void write(std::ostream& out) const;
    static Archive read(std::istream& in);

    void save(const std::filesystem::path& path) const;
    static Archive load(const std::filesystem::path& path);

private:
    const Value& find(const std::string& name) const;

    std::vector<std::pair<std::string, Value>> fields_;
};

}  // namespace fgmopt
