#include "shapecode/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace shapecode {

std::size_t ClassLabels::class_size(const std::string& name) const {
  return static_cast<std::size_t>(
      std::count_if(class_of.begin(), class_of.end(), [&](const auto& kv) { return kv.second == name; }));
}

const std::string& ClassLabels::label(const std::string& model_id) const {
  auto it = class_of.find(model_id);
  if (it == class_of.end()) throw InvalidArgument("model '" + model_id + "' has no class label");
  return it->second;
}

namespace {

bool next_content_line(std::istream& in, std::string& line, std::size_t& number) {
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

long parse_count(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "expected a nonnegative count, got '" + tok + "'");
  }
}

}  // namespace

ClassLabels parse_cla(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!next_content_line(in, line, number)) throw ParseError(number, "empty classification file");
  auto tok = tokens_of(line);
  if (tok.size() != 2 || tok[0] != "PSB") throw ParseError(number, "expected header 'PSB <version>'");
  if (!next_content_line(in, line, number)) throw ParseError(number, "missing counts line");
  tok = tokens_of(line);
  if (tok.size() != 2) throw ParseError(number, "expected '<categories> <models>'");
  const long categories = parse_count(tok[0], number);
  const long models = parse_count(tok[1], number);

  ClassLabels labels;
  std::set<std::string> names{"0"};
  long seen_models = 0;
  for (long c = 0; c < categories; ++c) {
    if (!next_content_line(in, line, number)) throw ParseError(number, "fewer categories than declared");
    tok = tokens_of(line);
    if (tok.size() != 3) throw ParseError(number, "expected '<name> <parent> <count>'");
    const std::string name = tok[0];
    if (!names.count(tok[1])) throw ParseError(number, "unknown parent category '" + tok[1] + "'");
    if (!names.insert(name).second) throw ParseError(number, "duplicate category '" + name + "'");
    const long count = parse_count(tok[2], number);
    for (long m = 0; m < count; ++m) {
      if (!next_content_line(in, line, number))
        throw ParseError(number, "category '" + name + "' lists fewer models than its count");
      tok = tokens_of(line);
      if (tok.size() != 1) throw ParseError(number, "expected a single model id");
      if (!labels.class_of.emplace(tok[0], name).second)
        throw ParseError(number, "model '" + tok[0] + "' listed twice");
      ++seen_models;
    }
  }
  if (next_content_line(in, line, number)) {
    if (tokens_of(line).size() == 1) throw ParseError(number, "more model ids than the category count declares");
    throw ParseError(number, "more categories than declared");
  }
  if (seen_models != models)
    throw ParseError(number, "header declares " + std::to_string(models) + " models, found " +
                                 std::to_string(seen_models));
  return labels;
}

ClassLabels load_cla(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open classification file " + path.string());
  return parse_cla(in);
}

void write_cla(std::ostream& out, const std::vector<std::pair<std::string, std::vector<std::string>>>& classes) {
  std::size_t total = 0;
  for (const auto& c : classes) total += c.second.size();
  out << "PSB 1\n" << classes.size() << ' ' << total << "\n\n";
  for (const auto& [name, ids] : classes) {
    out << name << " 0 " << ids.size() << '\n';
    for (const auto& id : ids) out << id << '\n';
    out << '\n';
  }
}

std::vector<RankedList> rank_queries(const DistanceMatrix& d) {
  require_dims(d.values.rows() == d.values.cols() && d.values.rows() == static_cast<Eigen::Index>(d.size()),
               "rank_queries: matrix must be square and match the id list");
  const std::size_t n = d.size();
  std::vector<RankedList> ranked(n);
  for (std::size_t q = 0; q < n; ++q) {
    RankedList& list = ranked[q];
    for (std::size_t c = 0; c < n; ++c)
      if (c != q) list.push_back(c);
    const auto row = d.values.row(static_cast<Eigen::Index>(q));
    std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return row(static_cast<Eigen::Index>(a)) < row(static_cast<Eigen::Index>(b));
    });
  }
  return ranked;
}

RetrievalReport score(const std::vector<RankedList>& ranked, const std::vector<std::string>& ids,
                      const ClassLabels& labels) {
  require_dims(ranked.size() == ids.size(), "score: one ranked list per id required");
  std::map<std::string, std::size_t> class_sizes;
  for (const auto& id : ids) ++class_sizes[labels.label(id)];

  RetrievalReport report;
  for (std::size_t q = 0; q < ids.size(); ++q) {
    QueryScore qs;
    qs.model_id = ids[q];
    const std::string& cls = labels.label(ids[q]);
    const std::size_t c = class_sizes[cls];
    if (c > 1) {
      const std::size_t relevant = c - 1;
      std::size_t hits_first = 0, hits_second = 0;
      const auto& list = ranked[q];
      for (std::size_t r = 0; r < list.size() && r < 2 * relevant; ++r) {
        if (labels.label(ids[list[r]]) != cls) continue;
        if (r < relevant) ++hits_first;
        ++hits_second;
      }
      qs.scored = true;
      qs.nn = !list.empty() && labels.label(ids[list.front()]) == cls ? 1.0 : 0.0;
      qs.ft = static_cast<double>(hits_first) / static_cast<double>(relevant);
      qs.st = static_cast<double>(hits_second) / static_cast<double>(relevant);
      report.nn += qs.nn;
      report.ft += qs.ft;
      report.st += qs.st;
      ++report.scored_queries;
    }
    report.queries.push_back(qs);
  }
  if (report.scored_queries > 0) {
    const double n = static_cast<double>(report.scored_queries);
    report.nn /= n;
    report.ft /= n;
    report.st /= n;
  }
  return report;
}

std::string report_json(const RetrievalReport& report, const std::string& method) {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["nn"] = report.nn;
  j["ft"] = report.ft;
  j["st"] = report.st;
  j["scored_queries"] = report.scored_queries;
  auto& per = j["queries"] = nlohmann::ordered_json::array();
  for (const auto& q : report.queries)
    per.push_back({{"id", q.model_id}, {"scored", q.scored}, {"nn", q.nn}, {"ft", q.ft}, {"st", q.st}});
  return j.dump(2);
}

std::string report_table(const std::vector<std::pair<std::string, RetrievalReport>>& rows) {
  std::size_t width = std::string("Algorithm").size();
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Algorithm" << "  " << std::right << std::setw(6)
      << "NN(%)" << "  " << std::setw(6) << "FT(%)" << "  " << std::setw(6) << "ST(%)" << '\n';
  out << std::fixed << std::setprecision(1);
  for (const auto& [name, rep] : rows)
    out << std::left << std::setw(static_cast<int>(width)) << name << "  " << std::right << std::setw(6)
        << 100.0 * rep.nn << "  " << std::setw(6) << 100.0 * rep.ft << "  " << std::setw(6) << 100.0 * rep.st
        << '\n';
  return out.str();
}

}  // namespace shapecode
