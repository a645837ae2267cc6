#include "sfi_lee/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace sfi {

const char* const kCsvHeader =
    "experiment,model,sigma_init,lambda,seed,metric,metric_rate,value,test_rate,degradation_db,averaged";

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, int line) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw DataError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path + "'");
    f << text;
    if (!f) throw DataError("write failed for '" + path + "'");
}

std::string rate_tag(double r) {
    std::ostringstream s;
    s << std::llround(r);
    return s.str();
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string rows_to_csv(const std::vector<ReportRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += quote(r.experiment) + ',' + quote(r.model) + ',' + format_number(r.sigma_init) + ',' +
               format_number(r.lambda) + ',' + std::to_string(r.seed) + ',' + quote(r.metric) + ',' +
               format_number(r.metric_rate) + ',' + format_number(r.value) + ',' + format_number(r.test_rate) + ',' +
               format_number(r.degradation_db) + ',' + (r.averaged ? "1" : "0") + '\n';
    }
    return out;
}

std::vector<ReportRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw DataError("csv header does not match the report format");
    std::vector<ReportRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11) throw DataError("csv line " + std::to_string(lineno) + ": expected 11 fields");
        ReportRow r;
        r.experiment = f[0];
        r.model = f[1];
        r.sigma_init = to_double(f[2], lineno);
        r.lambda = to_double(f[3], lineno);
        r.seed = static_cast<std::int64_t>(to_double(f[4], lineno));
        r.metric = f[5];
        r.metric_rate = to_double(f[6], lineno);
        r.value = to_double(f[7], lineno);
        r.test_rate = to_double(f[8], lineno);
        r.degradation_db = to_double(f[9], lineno);
        if (f[10] != "0" && f[10] != "1") throw DataError("csv line " + std::to_string(lineno) + ": bad averaged flag");
        r.averaged = f[10] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ReportRow> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::string correlations_to_csv(const std::vector<Correlation>& cs) {
    std::string out = "x,y,metric_rate,test_rate,rho,points,note\n";
    for (const auto& c : cs) {
        out += quote(c.x) + ',' + quote(c.y) + ',' + format_number(c.metric_rate) + ',' + format_number(c.test_rate) +
               ',' + format_number(c.rho) + ',' + std::to_string(c.points) + ',' + quote(c.note) + '\n';
    }
    return out;
}

std::string report_json(const Report& report) {
    using nlohmann::ordered_json;
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"model", r.model},
                        {"sigma_init", r.sigma_init},
                        {"lambda", r.lambda},
                        {"seed", r.seed},
                        {"metric", r.metric},
                        {"metric_rate", r.metric_rate},
                        {"value", r.value},
                        {"test_rate", r.test_rate},
                        {"degradation_db", r.degradation_db},
                        {"averaged", r.averaged}});
    }
    ordered_json cs = ordered_json::array();
    for (const auto& c : report.correlations) {
        ordered_json j = {{"x", c.x},
                          {"y", c.y},
                          {"metric_rate", c.metric_rate},
                          {"test_rate", c.test_rate},
                          {"points", c.points}};
        j["rho"] = std::isnan(c.rho) ? ordered_json(nullptr) : ordered_json(c.rho);
        if (!c.note.empty()) j["note"] = c.note;
        cs.push_back(j);
    }
    ordered_json out;
    out[report.experiment] = {{"rows", rows}, {"correlations", cs}, {"skipped_tracks", report.skipped_tracks}};
    return out.dump(2) + "\n";
}

std::string scatter_svg(const std::vector<ReportRow>& rows, const std::string& metric, double metric_rate,
                        double test_rate) {
    bool any_averaged = false;
    for (const auto& r : rows) any_averaged = any_averaged || r.averaged;
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        if (r.metric == metric && r.metric_rate == metric_rate && r.test_rate == test_rate &&
            r.averaged == any_averaged && std::isfinite(r.value) && std::isfinite(r.degradation_db)) {
            xs.push_back(r.value);
            ys.push_back(r.degradation_db);
        }
    }
    if (xs.empty()) {
        throw DataError("no values for metric '" + metric + "' at " + rate_tag(test_rate) + " Hz; refusing to plot");
    }

    constexpr double W = 480, H = 360, ml = 60, mr = 20, mt = 30, mb = 50;
    auto [xmin_it, xmax_it] = std::minmax_element(xs.begin(), xs.end());
    auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
    double x0 = *xmin_it, x1 = *xmax_it, y0 = *ymin_it, y1 = *ymax_it;
    if (x1 - x0 <= 0.0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 <= 0.0) { y0 -= 0.5; y1 += 0.5; }
    const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
    x0 -= px; x1 += px; y0 -= py; y1 += py;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    s << "<!-- metric=" << metric << " metric_rate=" << format_number(metric_rate)
      << " test_rate=" << format_number(test_rate) << " averaged=" << (any_averaged ? 1 : 0) << " -->\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s << "<!-- point " << format_number(xs[i]) << " " << format_number(ys[i]) << " -->\n";
    }
    s << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << metric
      << "</text>\n";
    s << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << H / 2 << ")\">SI-SDR degradation at " << rate_tag(test_rate) << " Hz (dB)</text>\n";
    s << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\" font-size=\"10\">" << format_number(x0) << "</text>\n";
    s << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16 << "\" font-size=\"10\" text-anchor=\"end\">"
      << format_number(x1) << "</text>\n";
    s << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb << "\" font-size=\"10\" text-anchor=\"end\">" << format_number(y0)
      << "</text>\n";
    s << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 8 << "\" font-size=\"10\" text-anchor=\"end\">" << format_number(y1)
      << "</text>\n";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s << "<circle cx=\"" << sx(xs[i]) << "\" cy=\"" << sy(ys[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
    if (xs.size() >= 2 && *xmax_it > *xmin_it) {
        const LineFit fit = least_squares(xs, ys);
        s << "<!-- fit slope=" << format_number(fit.slope) << " intercept=" << format_number(fit.intercept) << " -->\n";
        const double a = *xmin_it, b = *xmax_it;
        s << "<line x1=\"" << sx(a) << "\" y1=\"" << sy(fit.slope * a + fit.intercept) << "\" x2=\"" << sx(b)
          << "\" y2=\"" << sy(fit.slope * b + fit.intercept) << "\" stroke=\"firebrick\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

std::vector<std::string> emit_report(const Report& report, const std::string& dir) {
    if (report.rows.empty()) throw DataError("report has no rows");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory '" + dir + "'");
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& text) {
        const std::string path = (fs::path(dir) / name).string();
        write_file(path, text);
        written.push_back(path);
    };
    put("rows.csv", rows_to_csv(report.rows));
    put("correlations.csv", correlations_to_csv(report.correlations));
    put("report.json", report_json(report));

    std::set<std::tuple<std::string, double, double>> plots;
    std::vector<std::tuple<std::string, double, double>> order;
    for (const auto& r : report.rows) {
        if (plots.insert({r.metric, r.metric_rate, r.test_rate}).second) order.emplace_back(r.metric, r.metric_rate, r.test_rate);
    }
    for (const auto& [metric, mrate, trate] : order) {
        put("scatter_" + metric + "_m" + rate_tag(mrate) + "_t" + rate_tag(trate) + ".svg",
            scatter_svg(report.rows, metric, mrate, trate));
    }
    return written;
}

}  // namespace sfi
