#include "igraph/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "igraph/error.hpp"

namespace igraph {

Vocabulary::Vocabulary(std::vector<std::string> ids) {
  for (auto& id : ids) intern(id);
}

std::size_t Vocabulary::intern(std::string_view id) {
  std::string key(id);
  if (auto it = lookup_.find(key); it != lookup_.end()) return it->second;
  const std::size_t idx = ids_.size();
  ids_.push_back(key);
  lookup_.emplace(std::move(key), idx);
  return idx;
}

std::size_t Vocabulary::index(std::string_view id) const {
  auto it = lookup_.find(std::string(id));
  if (it == lookup_.end()) throw IndexError("unknown id '" + std::string(id) + "'");
  return it->second;
}

bool Vocabulary::contains(std::string_view id) const { return lookup_.contains(std::string(id)); }

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

RatingsDataset parse_movielens(std::istream& in, double min_rating, double max_rating) {
  RatingsDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 4) {
      throw ParseError(where + ": expected 4 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError(where + ": empty id");
    double rating = 0.0;
    std::int64_t timestamp = 0;
    if (!parse_number(fields[2], rating)) {
      throw ParseError(where + ": rating '" + std::string(fields[2]) + "' is not a number");
    }
    if (!parse_number(fields[3], timestamp)) {
      throw ParseError(where + ": timestamp '" + std::string(fields[3]) + "' is not an integer");
    }
    if (!(rating >= min_rating && rating <= max_rating)) {
      throw ValidationError(where + ": rating " + std::string(fields[2]) + " outside [" +
                            std::to_string(min_rating) + ", " + std::to_string(max_rating) + "]");
    }
    Rating r;
    r.user = ds.users.intern(fields[0]);
    r.item = ds.items.intern(fields[1]);
    r.value = rating;
    r.timestamp = timestamp;
    ds.entries.push_back(r);
  }
  return ds;
}

RatingsDataset load_movielens(const std::filesystem::path& path, double min_rating,
                              double max_rating) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file " + path.string());
  return parse_movielens(in, min_rating, max_rating);
}

void write_movielens(std::ostream& out, const RatingsDataset& ds) {
  std::ostringstream buf;
  buf.precision(17);
  for (const Rating& r : ds.entries) {
    buf << ds.users.id(r.user) << '\t' << ds.items.id(r.item) << '\t' << r.value << '\t'
        << r.timestamp << '\n';
  }
  out << buf.str();
}

RatingsDataset reindex(const RatingsDataset& ds, const Vocabulary& users, const Vocabulary& items) {
  RatingsDataset out;
  out.users = users;
  out.items = items;
  out.entries.reserve(ds.size());
  for (Rating r : ds.entries) {
    const std::string& user = ds.users.id(r.user);
    const std::string& item = ds.items.id(r.item);
    if (!users.contains(user)) throw DataError("unknown user id '" + user + "'");
    if (!items.contains(item)) throw DataError("unknown item id '" + item + "'");
    r.user = users.index(user);
    r.item = items.index(item);
    out.entries.push_back(r);
  }
  return out;
}

Split split(const RatingsDataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(ds.size()));
  std::vector<std::size_t> user_count(ds.users.size(), 0);
  std::vector<std::size_t> item_count(ds.items.size(), 0);
  std::vector<bool> in_test(ds.size(), false);
  for (std::size_t i = n_test; i < order.size(); ++i) {
    const Rating& r = ds.entries[order[i]];
    ++user_count[r.user];
    ++item_count[r.item];
  }
  Split out;
  for (std::size_t i = 0; i < n_test; ++i) {
    const Rating& r = ds.entries[order[i]];
    if (user_count[r.user] == 0 || item_count[r.item] == 0) {
      ++user_count[r.user];
      ++item_count[r.item];
      ++out.moved_to_train;
    } else {
      in_test[order[i]] = true;
    }
  }
  out.train.users = out.test.users = ds.users;
  out.train.items = out.test.items = ds.items;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (in_test[i] ? out.test : out.train).entries.push_back(ds.entries[i]);
  }
  out.realized_test_fraction =
      ds.empty() ? 0.0 : static_cast<double>(out.test.size()) / static_cast<double>(ds.size());
  return out;
}

}  // namespace igraph
