#ifndef SHAPECODE_EVAL_HPP
#define SHAPECODE_EVAL_HPP

#include "shapecode/match.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace shapecode {

struct ClassLabels {
  std::map<std::string, std::string> class_of;  // model id -> leaf category

  std::size_t class_size(const std::string& name) const;
  const std::string& label(const std::string& model_id) const;
};

/// PSB classification file: "PSB <version>", "<categories> <models>", then
/// per category "<name> <parent> <count>" followed by <count> model ids.
ClassLabels parse_cla(std::istream& in);
ClassLabels load_cla(const std::filesystem::path& path);
void write_cla(std::ostream& out, const std::vector<std::pair<std::string, std::vector<std::string>>>& classes);

/// Candidate indices for one query, nearest first.
using RankedList = std::vector<std::size_t>;

/// Ascending distance, query excluded, ties by position in the id order.
std::vector<RankedList> rank_queries(const DistanceMatrix& d);

struct QueryScore {
  std::string model_id;
  bool scored = false;  // false for singleton classes
  double nn = 0.0, ft = 0.0, st = 0.0;
};

struct RetrievalReport {
  double nn = 0.0, ft = 0.0, st = 0.0;
  std::size_t scored_queries = 0;
  std::vector<QueryScore> queries;
};

/// Nearest neighbor, first tier (recall in the top C-1) and second tier
/// (recall in the top 2(C-1)), averaged over queries whose class has C > 1.
RetrievalReport score(const std::vector<RankedList>& ranked, const std::vector<std::string>& ids,
                      const ClassLabels& labels);

inline RetrievalReport evaluate(const DistanceMatrix& d, const ClassLabels& labels) {
  return score(rank_queries(d), d.ids, labels);
}

std::string report_json(const RetrievalReport& report, const std::string& method);
/// Aligned columns: Algorithm | NN(%) | FT(%) | ST(%).
std::string report_table(const std::vector<std::pair<std::string, RetrievalReport>>& rows);

}  // namespace shapecode

#endif  // SHAPECODE_EVAL_HPP
