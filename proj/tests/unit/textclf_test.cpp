#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "igraph/error.hpp"
#include "igraph/gradcheck.hpp"
#include "igraph/oracles.hpp"
#include "igraph/textclf.hpp"

namespace igraph::textclf {
namespace {

const Dims kDims{6, 3, 4, 2, 2};

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

TEST(Corpus, ParsesLabelsAndTokens) {
  const Corpus c = load_corpus(IGRAPH_TEST_DATA_DIR "/corpus_small.txt");
  ASSERT_EQ(c.documents.size(), 3u);
  EXPECT_EQ(c.labels.size(), 2u);
  EXPECT_EQ(c.documents[2].label, c.documents[0].label);
  EXPECT_EQ(c.documents[0].tokens.size(), 4u);
  EXPECT_EQ(c.documents[2].tokens[0], c.documents[0].tokens[1]);
  std::ostringstream out;
  write_corpus(out, c);
  const Corpus back = parse(out.str());
  EXPECT_EQ(back.vocabulary, c.vocabulary);
}

TEST(Corpus, MalformedLineReportsLineNumber) {
  try {
    load_corpus(IGRAPH_TEST_DATA_DIR "/corpus_malformed.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse("\tword\n"), ParseError);
  EXPECT_THROW(parse("label\t   \n"), ParseError);
}

TEST(Corpus, PlantedTopicsUseDisjointVocabularies) {
  const Corpus c = make_planted_corpus(200, 3);
  EXPECT_EQ(c.documents.size(), 200u);
  EXPECT_EQ(c.labels.size(), 2u);
  std::size_t on_topic = 0, total = 0;
  for (const Document& d : c.documents) {
    EXPECT_GE(d.tokens.size(), 5u);
    EXPECT_LE(d.tokens.size(), 12u);
    const std::string topic = c.labels.id(d.label) == "topic0" ? "alpha" : "beta";
    for (std::size_t t : d.tokens) {
      on_topic += c.vocabulary.id(t).starts_with(topic) ? 1 : 0;
      ++total;
    }
  }
  const double rate = static_cast<double>(on_topic) / static_cast<double>(total);
  EXPECT_NEAR(rate, 1.0 - kStrayWordRate, 0.03);
}

ParameterStore zeroed(const Dims& dims) {
  ParameterStore p = init_params(dims, 1);
  for (auto& [_, t] : p.entries()) {
    for (double& v : t.data()) v = 0.0;
  }
  return p;
}

TEST(Encoder, ZeroWeightsGiveZeroStates) {
  ParameterStore p = zeroed(kDims);
  for (double& v : p.at(names::kWordEmbed).data()) v = 0.3;
  Graph g(&p);
  const std::vector<std::size_t> tokens{0, 3, 5};
  for (NodeId h : encode_words(g, kDims, tokens)) {
    for (double v : g.value(h).data()) EXPECT_EQ(v, 0.0);
  }
  EXPECT_THROW(encode_words(g, kDims, std::vector<std::size_t>{}), ContractError);
  EXPECT_THROW(encode_words(g, kDims, std::vector<std::size_t>{6}), IndexError);
}

TEST(Encoder, FirstStateIgnoresLaterTokens) {
  const ParameterStore p = init_params(kDims, 2);
  Graph g(&p);
  const auto a = encode_words(g, kDims, std::vector<std::size_t>{1, 2, 3});
  const auto b = encode_words(g, kDims, std::vector<std::size_t>{1, 5, 0});
  EXPECT_EQ(g.value(a[0]), g.value(b[0]));
  EXPECT_NE(g.value(a[1]), g.value(b[1]));
}

TEST(Encoder, FiveStepGradient) {
  ParameterStore p = init_params(kDims, 3);
  const Document doc{{0, 4, 2, 2, 5}, 1};
  const LossBuilder build = [&](Graph& g) {
    const auto h = encode_words(g, kDims, doc.tokens);
    return g.sum_all(g.mul(h.back(), g.constant(Tensor::vector({1.0, -2.0, 0.5, 3.0}))));
  };
  for (const char* name : {names::kEncoderWeight, names::kEncoderBias, names::kWordEmbed}) {
    EXPECT_LT(finite_diff_check(p, build, name, 1e-5, {}, 1e-6).max_rel_error, 1e-4) << name;
  }
}

TEST(WordTopics, UniformAndHandSet) {
  Graph g;
  const NodeId h = g.constant(Tensor::vector({1.0, 0.0}));
  const Tensor uniform = g.value(word_topic_dist(g, h, g.constant(Tensor(Shape{3, 2}))));
  for (double v : uniform.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const Tensor m = Tensor::matrix({{0.3, 9.0}, {-1.2, 4.0}});
  const Tensor out = g.value(word_topic_dist(g, h, g.constant(m)));
  const auto expected = oracle::softmax({0.3, -1.2});
  EXPECT_NEAR(out[0], expected[0], 1e-15);
  EXPECT_NEAR(out[1], expected[1], 1e-15);
  EXPECT_NEAR(out[0] + out[1], 1.0, 1e-9);
}

TEST(DocTopics, PointMassAndEqualMix) {
  Graph g;
  const NodeId single[] = {g.constant(Tensor::vector({0.2, 0.8}))};
  EXPECT_EQ(g.value(doc_topic_dist(g, single)), Tensor::vector({0.2, 0.8}));
  const NodeId two[] = {g.constant(Tensor::vector({1, 0})), g.constant(Tensor::vector({0, 1}))};
  const Tensor mix = g.value(doc_topic_dist(g, two));
  EXPECT_NEAR(mix[0], 0.5, 1e-15);
  EXPECT_NEAR(mix[1], 0.5, 1e-15);
}

TEST(DocTopics, MatchesEnumeration) {
  const ParameterStore p = init_params(kDims, 4);
  Graph g(&p);
  std::vector<NodeId> word_topics;
  NodeId doc_topics{};
  forward(g, kDims, Document{{1, 1, 3, 0, 5, 2}, 0}, &word_topics, &doc_topics);
  ASSERT_EQ(word_topics.size(), 6u);
  const Tensor fast = g.value(doc_topics);
  const Tensor slow = doc_topic_dist_enumerated(g, word_topics);
  for (std::size_t k = 0; k < fast.size(); ++k) EXPECT_NEAR(fast[k], slow[k], 1e-10);
  EXPECT_NEAR(fast[0] + fast[1], 1.0, 1e-12);
}

TEST(Classify, ZeroWeightsUniform) {
  Graph g;
  const Tensor out = g.value(classify(g, g.constant(Tensor::vector({0.3, 0.7})), g.constant(Tensor(Shape{3, 2}))));
  for (double v : out.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Classify, CrossEntropyGradientReachesEncoder) {
  ParameterStore p = init_params(kDims, 5);
  const Document doc{{2, 0, 4}, 1};
  const LossBuilder build = [&](Graph& g) { return cross_entropy(g, forward(g, kDims, doc), doc.label); };
  Graph g(&p);
  const Gradients grads = g.backward(build(g));
  double largest = 0.0;
  for (double v : grads.at(names::kEncoderWeight).data()) largest = std::max(largest, std::fabs(v));
  EXPECT_GT(largest, 0.0);
  for (const auto& [name, _] : grads) {
    EXPECT_LT(finite_diff_check(p, build, name, 1e-5, {}, 1e-6).max_rel_error, 1e-4) << name;
  }
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_EQ(parse_config(nlohmann::json::object()).epochs, 100u);
  EXPECT_EQ(parse_config({{"hidden", 5}}).hidden, 5u);
  EXPECT_THROW(parse_config({{"hiden", 5}}), ConfigError);
  EXPECT_THROW(parse_config({{"learning_rate", -1.0}}), ConfigError);
}

TEST(Demo, SingleClassIsFlaggedDegenerate) {
  const Corpus c = parse("only\ta b c\nonly\tb c\nonly\tc a\nonly\ta a\n");
  Config cfg;
  cfg.epochs = 2;
  const DemoReport r = run_demo(c, cfg);
  EXPECT_TRUE(r.degenerate_labels);
  EXPECT_EQ(r.test_accuracy, 1.0);
}

TEST(Demo, LearnsSmallPlantedCorpus) {
  const Corpus c = make_planted_corpus(60, 8);
  Config cfg;
  cfg.epochs = 15;
  const DemoReport r = run_demo(c, cfg);
  EXPECT_FALSE(r.degenerate_labels);
  EXPECT_EQ(r.history.size(), 15u);
  EXPECT_GE(r.train_accuracy, 0.9);
  EXPECT_LE(r.max_marginal_gap, 1e-10);
}

}  // namespace
}  // namespace igraph::textclf
