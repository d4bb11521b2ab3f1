#include "igraph/textclf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "igraph/error.hpp"
#include "igraph/factor_graph.hpp"

namespace igraph::textclf {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Corpus IO

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(where + ": expected 'label<TAB>tokens'");
    const std::string label = line.substr(0, tab);
    if (label.empty()) throw ParseError(where + ": empty label");
    Document doc;
    std::istringstream tokens(line.substr(tab + 1));
    std::string tok;
    while (tokens >> tok) doc.tokens.push_back(corpus.vocabulary.intern(tok));
    if (doc.tokens.empty()) throw ParseError(where + ": document has no tokens");
    doc.label = corpus.labels.intern(label);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Document& doc : corpus.documents) {
    out << corpus.labels.id(doc.label) << '\t';
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) out << ' ';
      out << corpus.vocabulary.id(doc.tokens[i]);
    }
    out << '\n';
  }
}

Corpus make_planted_corpus(std::size_t num_docs, std::uint64_t seed, std::size_t words_per_topic) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution stray(kStrayWordRate);
  std::uniform_int_distribution<std::size_t> length(5, 12);
  std::uniform_int_distribution<std::size_t> word(0, words_per_topic - 1);
  const char* prefixes[] = {"alpha", "beta"};
  std::ostringstream text;
  for (std::size_t d = 0; d < num_docs; ++d) {
    const std::size_t major = coin(rng) ? 1 : 0;
    const std::size_t len = length(rng);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t topic = stray(rng) ? 1 - major : major;
      tokens.push_back(prefixes[topic] + std::to_string(word(rng)));
    }
    text << "topic" << major << '\t';
    for (std::size_t i = 0; i < tokens.size(); ++i) text << (i ? " " : "") << tokens[i];
    text << '\n';
  }
  std::istringstream in(text.str());
  return parse_corpus(in);
}

Config parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("demo config must be a JSON object");
  static const std::set<std::string> known{"embed_dim", "hidden",        "num_topics",
                                           "epochs",    "batch_size",    "learning_rate",
                                           "test_fraction", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  Config cfg;
  auto count = [&](const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer() || j.at(key).get<std::int64_t>() <= 0) {
      throw ConfigError(std::string("config key '") + key + "' must be a positive integer");
    }
    out = j.at(key).get<std::size_t>();
  };
  count("embed_dim", cfg.embed_dim);
  count("hidden", cfg.hidden);
  count("num_topics", cfg.num_topics);
  count("epochs", cfg.epochs);
  count("batch_size", cfg.batch_size);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<std::int64_t>() < 0) throw ConfigError("config key 'seed' must be a nonnegative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("learning_rate")) {
    if (!j.at("learning_rate").is_number() || j.at("learning_rate").get<double>() < 0.0) {
      throw ConfigError("config key 'learning_rate' must be a nonnegative number");
    }
    cfg.learning_rate = j.at("learning_rate").get<double>();
  }
  if (j.contains("test_fraction")) {
    const json& v = j.at("test_fraction");
    if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0)) {
      throw ConfigError("config key 'test_fraction' must lie strictly between 0 and 1");
    }
    cfg.test_fraction = v.get<double>();
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Model

ParameterStore init_params(const Dims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterStore params;
  auto uniform = [&](Shape shape, double limit) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    return t;
  };
  auto glorot = [&](std::size_t out, std::size_t in) {
    return uniform({out, in}, std::sqrt(6.0 / static_cast<double>(in + out)));
  };
  params.add(names::kWordEmbed, uniform({dims.vocab, dims.embed_dim}, 0.5));
  params.add(names::kEncoderWeight, glorot(4 * dims.hidden, dims.embed_dim + dims.hidden));
  Tensor bias(Shape{4 * dims.hidden});
  for (std::size_t i = dims.hidden; i < 2 * dims.hidden; ++i) bias[i] = 1.0;  // forget gate
  params.add(names::kEncoderBias, std::move(bias));
  params.add(names::kTopicProjection, glorot(dims.num_topics, dims.hidden));
  params.add(names::kClassifier, glorot(dims.num_classes, dims.num_topics));
  return params;
}

std::vector<NodeId> encode_words(Graph& g, const Dims& dims, std::span<const std::size_t> tokens) {
  if (tokens.empty()) throw ContractError("encode_words: empty document");
  const std::size_t hid = dims.hidden;
  const NodeId embed = g.parameter(names::kWordEmbed);
  const NodeId weight = g.parameter(names::kEncoderWeight);
  const NodeId bias = g.parameter(names::kEncoderBias);
  NodeId h = g.constant(Tensor(Shape{hid}));
  NodeId c = g.constant(Tensor(Shape{hid}));
  std::vector<NodeId> out;
  for (std::size_t tok : tokens) {
    const NodeId x = g.gather(embed, tok);
    const NodeId pre = g.add(g.matmul(weight, g.concat(x, h)), bias);
    const NodeId in_gate = g.sigmoid(g.slice(pre, 0, hid));
    const NodeId forget = g.sigmoid(g.slice(pre, hid, hid));
    const NodeId out_gate = g.sigmoid(g.slice(pre, 2 * hid, hid));
    const NodeId candidate = g.tanh(g.slice(pre, 3 * hid, hid));
    c = g.add(g.mul(forget, c), g.mul(in_gate, candidate));
    h = g.mul(out_gate, g.tanh(c));
    out.push_back(h);
  }
  return out;
}

NodeId word_topic_dist(Graph& g, NodeId hidden, NodeId projection) {
  return g.softmax(g.matmul(projection, hidden), 0);
}

NodeId doc_topic_dist(Graph& g, std::span<const NodeId> word_topics) {
  if (word_topics.empty()) throw ContractError("doc_topic_dist: empty document");
  const std::size_t n = word_topics.size();
  const std::size_t topics = g.shape(word_topics[0]).at(0);
  const NodeId topic_given_word = g.stack(word_topics);
  const NodeId word_given_doc = g.constant(Tensor(Shape{1, n}, 1.0 / static_cast<double>(n)));
  FactorGraph fg;
  fg.add_variable("d", 1);
  fg.add_variable("w", n);
  fg.add_variable("z", topics);
  fg.add_factor(g, {"d", "w"}, word_given_doc, 1);
  fg.add_factor(g, {"w", "z"}, topic_given_word, 1);
  return marginal(g, fg, "z", Evidence{{"d", 0}});
}

Tensor doc_topic_dist_enumerated(const Graph& g, std::span<const NodeId> word_topics) {
  const std::size_t n = word_topics.size();
  const std::size_t topics = g.shape(word_topics.front()).at(0);
  Tensor out(Shape{topics});
  // Joint states (d, w, z) with d fixed to its single value.
  for (std::size_t w = 0; w < n; ++w) {
    const Tensor& row = g.value(word_topics[w]);
    for (std::size_t z = 0; z < topics; ++z) out[z] += (1.0 / static_cast<double>(n)) * row[z];
  }
  return out;
}

NodeId classify(Graph& g, NodeId doc_topics, NodeId classifier) {
  return g.softmax(g.matmul(classifier, doc_topics), 0);
}

NodeId forward(Graph& g, const Dims& dims, const Document& doc, std::vector<NodeId>* word_topics_out,
               NodeId* doc_topics_out) {
  const auto hidden = encode_words(g, dims, doc.tokens);
  const NodeId projection = g.parameter(names::kTopicProjection);
  std::vector<NodeId> word_topics;
  for (NodeId h : hidden) word_topics.push_back(word_topic_dist(g, h, projection));
  const NodeId doc_topics = doc_topic_dist(g, word_topics);
  if (word_topics_out) *word_topics_out = word_topics;
  if (doc_topics_out) *doc_topics_out = doc_topics;
  return classify(g, doc_topics, g.parameter(names::kClassifier));
}

NodeId cross_entropy(Graph& g, NodeId class_probs, std::size_t label) {
  return g.neg(g.log(g.gather(class_probs, label)));
}

namespace {

std::size_t argmax(const Tensor& t) {
  return static_cast<std::size_t>(std::max_element(t.values().begin(), t.values().end()) -
                                  t.values().begin());
}

}  // namespace

double accuracy(const ParameterStore& params, const Dims& dims, std::span<const Document> docs) {
  if (docs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Document& doc : docs) {
    Graph g(&params);
    if (argmax(g.value(forward(g, dims, doc))) == doc.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(docs.size());
}

DemoReport run_demo(const Corpus& corpus, const Config& config) {
  if (corpus.documents.empty()) throw ContractError("demo: empty corpus");
  Dims dims{corpus.vocabulary.size(), config.embed_dim, config.hidden, config.num_topics,
            corpus.labels.size()};

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(corpus.documents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(config.test_fraction * static_cast<double>(order.size()));
  n_test = std::min(n_test, order.size() - 1);
  std::vector<Document> test, trainset;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_test ? test : trainset).push_back(corpus.documents[order[i]]);
  }

  ParameterStore params = init_params(dims, config.seed);
  train::Adam adam({config.learning_rate});
  DemoReport report;
  report.train_docs = trainset.size();
  report.test_docs = test.size();
  report.num_classes = dims.num_classes;
  report.degenerate_labels = dims.num_classes < 2;

  std::vector<std::size_t> batch_order(trainset.size());
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    double total_loss = 0.0;
    double gap = 0.0;
    for (std::size_t start = 0; start < batch_order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(batch_order.size(), start + config.batch_size);
      Gradients grads;
      {
        Graph g(&params);
        NodeId loss = g.constant(Tensor::scalar(0.0));
        for (std::size_t i = start; i < stop; ++i) {
          const Document& doc = trainset[batch_order[i]];
          std::vector<NodeId> word_topics;
          NodeId doc_topics;
          const NodeId probs = forward(g, dims, doc, &word_topics, &doc_topics);
          const Tensor expected = doc_topic_dist_enumerated(g, word_topics);
          for (std::size_t z = 0; z < expected.size(); ++z) {
            gap = std::max(gap, std::fabs(expected[z] - g.value(doc_topics)[z]));
          }
          loss = g.add(loss, cross_entropy(g, probs, doc.label));
        }
        total_loss += g.value(loss)[0];
        loss = g.scale(loss, 1.0 / static_cast<double>(stop - start));
        grads = g.backward(loss);
      }
      adam.step(params, grads);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = total_loss / static_cast<double>(trainset.size());
    stats.train_accuracy = accuracy(params, dims, trainset);
    stats.test_accuracy = test.empty() ? stats.train_accuracy : accuracy(params, dims, test);
    stats.max_marginal_gap = gap;
    report.max_marginal_gap = std::max(report.max_marginal_gap, gap);
    report.history.push_back(stats);
  }
  report.train_accuracy = report.history.empty() ? accuracy(params, dims, trainset)
                                                 : report.history.back().train_accuracy;
  report.test_accuracy = report.history.empty() ? accuracy(params, dims, test)
                                                : report.history.back().test_accuracy;
  return report;
}

}  // namespace igraph::textclf
