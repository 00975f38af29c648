#include "fgmopt/archive.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fgmopt {

namespace {

constexpr const char* kMagic = "fgmopt-archive 1";

void check_name(const std::string& name)
{
    if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos)
        throw std::invalid_argument("Archive: field names must be non-empty without whitespace");
}

}  // namespace

void Archive::put(const std::string& name, Ints values)
{
    check_name(name);
    fields_.emplace_back(name, std::move(values));
}

void Archive::put(const std::string& name, Reals values)
{
    check_name(name);
    fields_.emplace_back(name, std::move(values));
}

void Archive::put(const std::string& name, std::string value)
{
    check_name(name);
    if (value.find('\n') != std::string::npos)
        throw std::invalid_argument("Archive: string fields must be a single line");
    fields_.emplace_back(name, std::move(value));
}

bool Archive::contains(const std::string& name) const
{
    return std::any_of(fields_.begin(), fields_.end(),
                       [&](const auto& f) { return f.first == name; });
}

const Archive::Value& Archive::find(const std::string& name) const
{
    for (const auto& [key, value] : fields_)
        if (key == name)
            return value;
    throw std::out_of_range("Archive: no field named '" + name + "'");
}

const Archive::Ints& Archive::ints(const std::string& name) const
{
    const auto* v = std::get_if<Ints>(&find(name));
    if (!v)
        throw std::runtime_error("Archive: field '" + name + "' is not an integer array");
    return *v;
}

const Archive::Reals& Archive::reals(const std::string& name) const
{
    const auto* v = std::get_if<Reals>(&find(name));
    if (!v)
        throw std::runtime_error("Archive: field '" + name + "' is not a real array");
    return *v;
}

const std::string& Archive::text(const std::string& name) const
{
    const auto* v = std::get_if<std::string>(&find(name));
    if (!v)
        throw std::runtime_error("Archive: field '" + name + "' is not a string");
    return *v;
}

void Archive::write(std::ostream& out) const
{
    out << kMagic << '\n';
    char buf[64];
    for (const auto& [name, value] : fields_) {
        if (const auto* ints = std::get_if<Ints>(&value)) {
            out << name << " i " << ints->size() << '\n';
            for (std::size_t k = 0; k < ints->size(); ++k)
                out << (*ints)[k] << ((k + 1) % 16 == 0 || k + 1 == ints->size() ? '\n' : ' ');
        } else if (const auto* reals = std::get_if<Reals>(&value)) {
            out << name << " f " << reals->size() << '\n';
            for (std::size_t k = 0; k < reals->size(); ++k) {
                std::snprintf(buf, sizeof buf, "%a", (*reals)[k]);
                out << buf << ((k + 1) % 8 == 0 || k + 1 == reals->size() ? '\n' : ' ');
            }
        } else {
            out << name << " s\n" << std::get<std::string>(value) << '\n';
        }
    }
    out << "end\n";
}

Archive Archive::read(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw std::runtime_error("Archive: missing header '" + std::string(kMagic) + "'");
    Archive archive;
    while (std::getline(in, line)) {
        if (line == "end")
            return archive;
        std::istringstream head(line);
        std::string name, kind;
        std::size_t count = 0;
        head >> name >> kind;
        if (kind == "s") {
            std::string value;
            if (!std::getline(in, value))
                throw std::runtime_error("Archive: truncated string field '" + name + "'");
            archive.put(name, std::move(value));
        } else if (kind == "i" && (head >> count)) {
            Ints values(count);
            for (auto& v : values)
                if (!(in >> v))
                    throw std::runtime_error("Archive: truncated integer field '" + name + "'");
            in >> std::ws;
            archive.put(name, std::move(values));
        } else if (kind == "f" && (head >> count)) {
            Reals values(count);
            std::string token;
            for (auto& v : values) {
                if (!(in >> token))
                    throw std::runtime_error("Archive: truncated real field '" + name + "'");
                char* end = nullptr;
                v = std::strtod(token.c_str(), &end);
                if (end == token.c_str() || *end != '\0')
                    throw std::runtime_error("Archive: bad real '" + token + "' in field '" +
                                             name + "'");
            }
            in >> std::ws;
            archive.put(name, std::move(values));
        } else {
            throw std::runtime_error("Archive: malformed field header '" + line + "'");
        }
    }
    throw std::runtime_error("Archive: missing 'end' marker");
}

void Archive::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("Archive: cannot open " + path.string() + " for writing");
    write(out);
}

Archive Archive::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("Archive: cannot open " + path.string());
    return read(in);
}

}  // namespace fgmopt
