#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace igraph {

struct Rating {
  std::size_t user = 0;
  std::size_t item = 0;
  double value = 0.0;
  std::int64_t timestamp = 0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

// External id -> dense index, in first-appearance order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> ids);

  std::size_t intern(std::string_view id);
  // Throws IndexError naming the id when it is unknown.
  std::size_t index(std::string_view id) const;
  bool contains(std::string_view id) const;
  const std::string& id(std::size_t index) const { return ids_.at(index); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

struct RatingsDataset {
  std::vector<Rating> entries;
  Vocabulary users;
  Vocabulary items;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

// "user<TAB>item<TAB>rating<TAB>timestamp" per line (MovieLens-100k u.data).
// Ratings outside [min_rating, max_rating] raise ValidationError; malformed
// lines raise ParseError with the line number.
RatingsDataset parse_movielens(std::istream& in, double min_rating = 1.0, double max_rating = 5.0);
RatingsDataset load_movielens(const std::filesystem::path& path, double min_rating = 1.0,
                              double max_rating = 5.0);
void write_movielens(std::ostream& out, const RatingsDataset& ds);

// Re-expresses `ds` in the index space of the given vocabularies (e.g. a
// checkpoint's). Throws DataError naming the first unknown id.
RatingsDataset reindex(const RatingsDataset& ds, const Vocabulary& users, const Vocabulary& items);

struct Split {
  RatingsDataset train;
  RatingsDataset test;
  double realized_test_fraction = 0.0;
  // Test candidates moved to train because their user or item was unseen.
  std::size_t moved_to_train = 0;
};

// Seeded shuffle, then partition. A test candidate whose user or item has no
// rating in train is moved to train. Both halves keep the full vocabularies.
Split split(const RatingsDataset& ds, double test_fraction, std::uint64_t seed);

}  // namespace igraph
