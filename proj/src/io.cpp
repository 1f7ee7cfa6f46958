#include "emtwin/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <system_error>

#include "emtwin/errors.hpp"

namespace emtwin::io {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_number(std::string_view text, std::string_view context) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text == "nan") return std::nan("");
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw Error(Errc::Parse, std::string(context) + ": '" + std::string(text) + "' is not a number");
    return v;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(Errc::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

void Table::add_row(std::vector<double> row) {
    if (row.size() != columns.size()) throw Error(Errc::InvalidArgument, "table row width mismatch");
    rows.push_back(std::move(row));
}

namespace {
std::string join(const Table& t, char sep) {
    std::string s;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) s += sep;
        s += t.columns[i];
    }
    s += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) s += sep;
            s += format_number(row[i]);
        }
        s += '\n';
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\r' || f.back() == '\t')) f.remove_suffix(1);
    }
    return out;
}
}  // namespace

std::string Table::to_csv() const { return join(*this, ','); }

std::string Table::to_tsv() const { return join(*this, '\t'); }

Table read_csv(const fs::path& path, const std::vector<std::string>& expected) {
    const std::string text = read_text(path);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Table t;
    std::vector<std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = line;
        if (sv.empty() || sv == "\r" || sv.front() == '#') continue;
        const auto fields = split(sv, ',');
        if (t.columns.empty()) {
            for (auto f : fields) t.columns.emplace_back(f);
            for (const auto& want : expected) {
                std::size_t k = 0;
                while (k < t.columns.size() && t.columns[k] != want) ++k;
                if (k == t.columns.size())
                    throw Error(Errc::Parse, path.string() + ":" + std::to_string(line_no) +
                                                 ": missing column '" + want + "' in header");
                index.push_back(k);
            }
            continue;
        }
        if (fields.size() != t.columns.size())
            throw Error(Errc::Parse, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(t.columns.size()) + " fields, found " +
                                         std::to_string(fields.size()));
        std::vector<double> row;
        for (std::size_t k = 0; k < expected.size(); ++k)
            row.push_back(parse_number(fields[index[k]], path.string() + ":" + std::to_string(line_no) +
                                                             ": field '" + expected[k] + "'"));
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw Error(Errc::Parse, path.string() + ": empty file, header row required");
    t.columns = expected;
    return t;
}

fs::path sidecar_path(const fs::path& csv) {
    fs::path p = csv;
    p.replace_extension(".json");
    return p;
}

Spectrum read_spectrum(const fs::path& csv) {
    // value column name depends on the file kind; sniff the header
    const std::string text = read_text(csv);
    const auto eol = text.find('\n');
    const std::string header = text.substr(0, eol);
    const std::string value_col = header.find("s21_sq") != std::string::npos ? "s21_sq" : "value";
    const Table t = read_csv(csv, {"f_hz", value_col});

    Spectrum s;
    for (const auto& row : t.rows) {
        s.f.push_back(row[0]);
        s.values.push_back(row[1]);
    }
    const fs::path side = sidecar_path(csv);
    if (fs::exists(side)) {
        json j;
        try {
            j = json::parse(read_text(side));
            s.unit = parse_spectrum_unit(j.at("unit").get<std::string>());
            s.enbw = j.at("enbw_hz").get<double>();
            s.n_avg = j.at("n_avg").get<int>();
        } catch (const json::exception& e) {
            throw Error(Errc::Parse, side.string() + ": " + e.what());
        }
    } else {
        s.unit = SpectrumUnit::Dimensionless;
        s.enbw = s.size() > 1 ? s.max_spacing() : 0.0;
    }
    s.validate();
    return s;
}

void write_spectrum(const fs::path& csv, const Spectrum& s, std::optional<std::uint64_t> seed) {
    Table t;
    t.columns = {"f_hz", s.is_psd() ? "value" : "s21_sq"};
    for (std::size_t i = 0; i < s.size(); ++i) t.rows.push_back({s.f[i], s.values[i]});
    json side = {{"unit", std::string(to_string(s.unit))}, {"enbw_hz", s.enbw}, {"n_avg", s.n_avg}};
    if (seed) side["seed"] = *seed;
    write_text_atomic(csv, t.to_csv());
    write_text_atomic(sidecar_path(csv), side.dump(2) + "\n");
}

std::vector<FluxPoint> read_flux_map(const fs::path& csv) {
    const Table t = read_csv(csv, {"b_ext_tesla", "f_c_hz"});
    std::vector<FluxPoint> map;
    for (const auto& row : t.rows) map.push_back({row[0], row[1]});
    return map;
}

}  // namespace emtwin::io
