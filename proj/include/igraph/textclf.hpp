#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "igraph/autodiff.hpp"
#include "igraph/data.hpp"
#include "igraph/train.hpp"

// Topic-model document classifier: a gated recurrent word encoder produces
// per-token topic distributions, a document-word-topic chain marginalizes
// them into a document topic vector, and a softmax layer classifies it.
namespace igraph::textclf {

struct Document {
  std::vector<std::size_t> tokens;
  std::size_t label = 0;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  Vocabulary labels;
};

// One document per line: "label<TAB>token token ...". ParseError carries the
// line number.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);

// Two disjoint topic vocabularies. Each document picks a topic, which is its
// label, and draws each token from that topic's vocabulary, or from the other
// one with probability kStrayWordRate. Lengths are uniform in [5, 12].
inline constexpr double kStrayWordRate = 0.1;
Corpus make_planted_corpus(std::size_t num_docs, std::uint64_t seed,
                           std::size_t words_per_topic = 12);

struct Config {
  std::size_t embed_dim = 8;
  std::size_t hidden = 16;
  std::size_t num_topics = 2;
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  double learning_rate = 1e-2;
  double test_fraction = 0.25;
  std::uint64_t seed = 7;
};

// Unknown keys and bad values raise ConfigError naming the key.
Config parse_config(const nlohmann::json& j);

struct Dims {
  std::size_t vocab = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden = 0;
  std::size_t num_topics = 0;
  std::size_t num_classes = 0;
};

namespace names {
inline constexpr const char* kWordEmbed = "word_embed";
inline constexpr const char* kEncoderWeight = "encoder/weight";
inline constexpr const char* kEncoderBias = "encoder/bias";
inline constexpr const char* kTopicProjection = "topic_projection";
inline constexpr const char* kClassifier = "classifier";
}  // namespace names

ParameterStore init_params(const Dims& dims, std::uint64_t seed);

// Left-to-right recurrent cell with input/forget/output gates and a cell
// state; gate pre-activations are W·[x_i; h_{i-1}] + b split in that order
// followed by the candidate. Returns h_1..h_n.
std::vector<NodeId> encode_words(Graph& g, const Dims& dims, std::span<const std::size_t> tokens);

// softmax(M·h)
NodeId word_topic_dist(Graph& g, NodeId hidden, NodeId projection);

// Marginal of z in the d-w-z chain, where P(w|d) gives each token position
// weight 1/n and row i of P(z|w) is word_topics[i].
NodeId doc_topic_dist(Graph& g, std::span<const NodeId> word_topics);

// Same chain evaluated by exhaustive enumeration on the node values.
Tensor doc_topic_dist_enumerated(const Graph& g, std::span<const NodeId> word_topics);

// softmax(W·f)
NodeId classify(Graph& g, NodeId doc_topics, NodeId classifier);

// Class distribution for one document; `doc_topics_out` receives the
// document-topic node when non-null.
NodeId forward(Graph& g, const Dims& dims, const Document& doc,
               std::vector<NodeId>* word_topics_out = nullptr, NodeId* doc_topics_out = nullptr);

// −log p(label | doc)
NodeId cross_entropy(Graph& g, NodeId class_probs, std::size_t label);

double accuracy(const ParameterStore& params, const Dims& dims, std::span<const Document> docs);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  // Largest |enumeration − sum-product| over the documents of the epoch.
  double max_marginal_gap = 0.0;
};

struct DemoReport {
  std::size_t train_docs = 0;
  std::size_t test_docs = 0;
  std::size_t num_classes = 0;
  double test_accuracy = 0.0;
  double train_accuracy = 0.0;
  double max_marginal_gap = 0.0;
  bool degenerate_labels = false;
  std::vector<EpochStats> history;
};

// Seeded split, Adam training with cross-entropy, held-out accuracy.
DemoReport run_demo(const Corpus& corpus, const Config& config);

}  // namespace igraph::textclf
