#ifndef DWAVE_IO_HPP
#define DWAVE_IO_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "semiflow.hpp"

namespace dwave {

/// Round-trip decimal form of a double (17 significant digits).
inline std::string formatNumber(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Write `content` to a sibling temporary file, then rename it over `path`.
inline void writeFileAtomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw InvalidInput("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out)
            throw InvalidInput("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw InvalidInput("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

/// Numeric table with a header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void addRow(const std::vector<double>& row)
    {
        if (row.size() != header_.size())
            throw InvalidInput("csv: row has " + std::to_string(row.size()) + " fields, header has " +
                               std::to_string(header_.size()));
        rows_.push_back(row);
    }

    std::size_t rows() const { return rows_.size(); }
    const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
    const std::vector<std::string>& header() const { return header_; }

    std::string str() const
    {
        std::string s;
        for (std::size_t i = 0; i < header_.size(); ++i)
            s += (i ? "," : "") + header_[i];
        s += '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i)
                    s += ',';
                s += formatNumber(r[i]);
            }
            s += '\n';
        }
        return s;
    }

    void write(const std::filesystem::path& path) const { writeFileAtomic(path, str()); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

/// Parse a numeric CSV with a header row (the inverse of CsvTable::str).
inline CsvTable readCsv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidInput("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw InvalidInput("'" + path.string() + "' is empty");
    std::vector<std::string> header;
    {
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            header.push_back(cell);
    }
    CsvTable t(header);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            row.push_back(std::stod(cell));
        t.addRow(row);
    }
    return t;
}

namespace detail {

inline void putBytes(std::string& out, const void* p, std::size_t n)
{
    const char* c = static_cast<const char*>(p);
    if constexpr (std::endian::native == std::endian::little) {
        out.append(c, n);
    } else {
        for (std::size_t i = n; i-- > 0;)
            out.push_back(c[i]);
    }
}

template <class T>
void put(std::string& out, T v)
{
    putBytes(out, &v, sizeof v);
}

template <class T>
T get(std::istream& in)
{
    char buf[sizeof(T)];
    if (!in.read(buf, sizeof buf))
        throw InvalidInput("state dump truncated");
    if constexpr (std::endian::native != std::endian::little)
        std::reverse(buf, buf + sizeof buf);
    T v;
    std::memcpy(&v, buf, sizeof v);
    return v;
}

} // namespace detail

inline constexpr char kStateMagic[8] = {'D', 'W', 'A', 'V', 'E', 'S', 'T', '1'};

/**
 * Full-state dump, little-endian throughout.
 *
 * Header: 8-byte magic "DWAVEST1", uint32 version (1), uint32 dim, then per
 * axis uint32 n, float64 lo, float64 hi; then uint64 state count and uint64
 * values per field. Each record: float64 time, N float64 u, N float64 v.
 */
inline std::string encodeStates(const SpatialGrid& grid, const std::vector<double>& times,
                                const std::vector<State>& states)
{
    if (times.size() != states.size())
        throw InvalidInput("state dump: times and states differ in length");
    std::string out(kStateMagic, sizeof kStateMagic);
    detail::put<std::uint32_t>(out, 1);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
    for (int k = 0; k < grid.dim(); ++k) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.n(k)));
        detail::put<double>(out, grid.extent(k).lo);
        detail::put<double>(out, grid.extent(k).hi);
    }
    detail::put<std::uint64_t>(out, states.size());
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(grid.size()));
    for (std::size_t s = 0; s < states.size(); ++s) {
        if (states[s].size() != grid.size())
            throw InvalidInput("state dump: state does not live on the grid");
        detail::put<double>(out, times[s]);
        for (Index i = 0; i < grid.size(); ++i)
            detail::put<double>(out, states[s].u[i]);
        for (Index i = 0; i < grid.size(); ++i)
            detail::put<double>(out, states[s].v[i]);
    }
    return out;
}

struct StateDump {
    SpatialGrid grid;
    std::vector<double> times;
    std::vector<State> states;
};

inline StateDump readStates(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInput("cannot open '" + path.string() + "'");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kStateMagic, 8) != 0)
        throw InvalidInput("'" + path.string() + "' is not a state dump");
    if (detail::get<std::uint32_t>(in) != 1)
        throw InvalidInput("unsupported state dump version");
    auto dim = detail::get<std::uint32_t>(in);
    if (dim < 1 || dim > 3)
        throw InvalidInput("state dump: bad dimension");
    std::vector<Interval> ext;
    std::vector<int> n;
    for (std::uint32_t k = 0; k < dim; ++k) {
        n.push_back(static_cast<int>(detail::get<std::uint32_t>(in)));
        double lo = detail::get<double>(in);
        double hi = detail::get<double>(in);
        ext.push_back(Interval{lo, hi});
    }
    StateDump d{SpatialGrid(ext, n), {}, {}};
    auto count = detail::get<std::uint64_t>(in);
    auto size = detail::get<std::uint64_t>(in);
    if (size != static_cast<std::uint64_t>(d.grid.size()))
        throw InvalidInput("state dump: field length does not match grid");
    for (std::uint64_t s = 0; s < count; ++s) {
        d.times.push_back(detail::get<double>(in));
        State U = State::zero(d.grid.size());
        for (Index i = 0; i < d.grid.size(); ++i)
            U.u[i] = detail::get<double>(in);
        for (Index i = 0; i < d.grid.size(); ++i)
            U.v[i] = detail::get<double>(in);
        d.states.push_back(std::move(U));
    }
    return d;
}

/// Ordered key = value report.
class Report {
public:
    void section(const std::string& name)
    {
        if (!text_.empty())
            text_ += '\n';
        text_ += "[" + name + "]\n";
    }
    void add(const std::string& key, double v) { text_ += key + " = " + formatNumber(v) + "\n"; }
    void add(const std::string& key, long long v) { text_ += key + " = " + std::to_string(v) + "\n"; }
    void add(const std::string& key, int v) { add(key, static_cast<long long>(v)); }
    void add(const std::string& key, bool v) { text_ += key + " = " + (v ? "true" : "false") + "\n"; }
    void add(const std::string& key, const std::string& v) { text_ += key + " = " + v + "\n"; }
    void add(const std::string& key, const char* v) { add(key, std::string(v)); }
    void note(const std::string& line) { text_ += "# " + line + "\n"; }

    const std::string& str() const { return text_; }
    void write(const std::filesystem::path& path) const { writeFileAtomic(path, text_); }

private:
    std::string text_;
};

} // namespace dwave

#endif
