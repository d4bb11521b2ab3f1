// igraph: train, evaluate and query the semantic-matching recommender, run
// the verification suites, and train the text-classifier demo.
//
// Exit codes: 0 ok, 1 config/validation, 2 data, 3 verification failure.
// stdout carries exactly one JSON document; logs go to stderr.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "igraph/checkpoint.hpp"
#include "igraph/config.hpp"
#include "igraph/data.hpp"
#include "igraph/error.hpp"
#include "igraph/kernels.hpp"
#include "igraph/recommender.hpp"
#include "igraph/synthetic.hpp"
#include "igraph/textclf.hpp"
#include "igraph/train.hpp"
#include "igraph/verify.hpp"

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

void emit(const ordered_json& doc) { std::cout << doc.dump(2) << '\n'; }

ordered_json metrics_json(const igraph::train::Metrics& m) {
  return {{"rmse", m.rmse}, {"mae", m.mae}, {"n", m.n}};
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_train(const fs::path& config_path, const std::optional<fs::path>& data_override) {
  const auto start = std::chrono::steady_clock::now();
  igraph::RunConfig cfg = igraph::load_run_config(config_path);
  if (data_override) cfg.data_path = *data_override;

  const double top = static_cast<double>(cfg.hyper.num_ratings);
  const igraph::RatingsDataset ds = igraph::load_movielens(cfg.data_path, 1.0, top);
  if (ds.empty()) throw igraph::DataError("no ratings in " + cfg.data_path.string());
  const igraph::Split parts = igraph::split(ds, cfg.test_fraction, cfg.train.seed);
  std::cerr << "loaded " << ds.size() << " ratings (" << ds.users.size() << " users, "
            << ds.items.size() << " items); train " << parts.train.size() << ", test "
            << parts.test.size() << "\n";

  igraph::rec::HyperParams hp = cfg.hyper;
  hp.num_users = ds.users.size();
  hp.num_items = ds.items.size();
  igraph::ParameterStore params = igraph::rec::init_params(hp, cfg.train.seed);

  std::ofstream log;
  if (cfg.log_path) {
    log.open(*cfg.log_path);
    if (!log) throw igraph::ConfigError("log_path: cannot write " + cfg.log_path->string());
  }
  const auto history = igraph::train::train_recommender(
      params, hp, parts.train, cfg.train, parts.test.empty() ? nullptr : &parts.test,
      [&](const igraph::train::EpochLog& e) {
        const std::string line = igraph::train::to_json_line(e);
        std::cerr << line << '\n';
        if (log) log << line << '\n' << std::flush;
      });

  const igraph::Checkpoint ckpt{hp, params, ds.users, ds.items};
  const std::string bytes = igraph::serialize_checkpoint(ckpt);
  {
    std::ofstream out(cfg.checkpoint_path, std::ios::binary);
    if (!out) throw igraph::ConfigError("checkpoint_path: cannot write " + cfg.checkpoint_path.string());
    out << bytes;
  }

  ordered_json report{{"checkpoint", cfg.checkpoint_path.string()},
                      {"digest", igraph::hex_digest(igraph::fnv1a64(bytes))},
                      {"epochs", history.size()},
                      {"train_size", parts.train.size()},
                      {"test_size", parts.test.size()},
                      {"realized_test_fraction", parts.realized_test_fraction},
                      {"moved_to_train", parts.moved_to_train},
                      {"final_train_loss", history.empty() ? 0.0 : history.back().train_loss}};
  if (!parts.test.empty()) {
    report["test"] = metrics_json(igraph::train::evaluate(params, hp, parts.test));
    report["baselines"] = {
        {"global_mean", metrics_json(igraph::train::global_mean_baseline(parts.train, parts.test))},
        {"per_user_mean", metrics_json(igraph::train::per_user_mean_baseline(parts.train, parts.test))}};
  }
  report["seconds"] = elapsed(start);
  emit(report);
  return kExitOk;
}

int cmd_eval(const fs::path& checkpoint_path, const fs::path& data_path) {
  const igraph::Checkpoint ckpt = igraph::load_checkpoint(checkpoint_path);
  const auto raw = igraph::load_movielens(data_path, 1.0, static_cast<double>(ckpt.hyper.num_ratings));
  if (raw.empty()) throw igraph::DataError("no ratings in " + data_path.string());
  const auto ds = igraph::reindex(raw, ckpt.users, ckpt.items);
  emit(metrics_json(igraph::train::evaluate(ckpt.params, ckpt.hyper, ds)));
  return kExitOk;
}

int cmd_predict(const fs::path& checkpoint_path, const std::string& user, const std::string& item) {
  const igraph::Checkpoint ckpt = igraph::load_checkpoint(checkpoint_path);
  if (!ckpt.users.contains(user)) throw igraph::IndexError("unknown user id '" + user + "'");
  if (!ckpt.items.contains(item)) throw igraph::IndexError("unknown item id '" + item + "'");
  const double r = igraph::rec::predict(ckpt.params, ckpt.hyper, ckpt.users.index(user),
                                        ckpt.items.index(item));
  std::cout << ordered_json(r).dump() << '\n';
  return kExitOk;
}

int cmd_verify(const std::optional<std::string>& fault, std::uint64_t seed) {
  if (fault) {
    const auto kind = igraph::op_from_name(*fault);
    if (!kind || *kind == igraph::OpKind::kLeaf) {
      throw igraph::ConfigError("--inject-fault: unknown op '" + *fault + "'");
    }
    igraph::set_gradient_fault(*kind);
    std::cerr << "injecting a sign error into the " << *fault << " gradient rule\n";
  }
  igraph::verify::Options opts;
  opts.seed = seed;
  const auto results = igraph::verify::run_all(opts);
  igraph::set_gradient_fault(std::nullopt);

  bool all = true;
  ordered_json suites = ordered_json::array();
  for (const auto& r : results) {
    all = all && r.passed;
    std::cerr << (r.passed ? "PASS " : "FAIL ") << r.suite << "  worst=" << r.worst
              << " tol=" << r.tolerance << " cases=" << r.cases << " (" << r.seconds << " s)\n";
    ordered_json failures = ordered_json::array();
    // The full list can be thousands of lines under an injected fault.
    for (std::size_t i = 0; i < r.failures.size() && i < 20; ++i) failures.push_back(r.failures[i]);
    suites.push_back({{"suite", r.suite},
                      {"passed", r.passed},
                      {"worst", r.worst},
                      {"tolerance", r.tolerance},
                      {"cases", r.cases},
                      {"seconds", r.seconds},
                      {"failure_count", r.failures.size()},
                      {"failures", failures}});
  }
  emit({{"passed", all},
        {"isa", std::string(igraph::kernels::isa_name(igraph::kernels::active_isa()))},
        {"injected_fault", fault ? ordered_json(*fault) : ordered_json(nullptr)},
        {"suites", suites}});
  return all ? kExitOk : kExitVerify;
}

int cmd_demo(const fs::path& corpus_path, const std::optional<fs::path>& config_path) {
  igraph::textclf::Config cfg;
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw igraph::ConfigError("cannot open config " + config_path->string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw igraph::ConfigError("config " + config_path->string() + " is not valid JSON: " + e.what());
    }
    cfg = igraph::textclf::parse_config(j);
  }
  const auto corpus = igraph::textclf::load_corpus(corpus_path);
  const auto report = igraph::textclf::run_demo(corpus, cfg);
  for (const auto& e : report.history) {
    std::cerr << ordered_json{{"epoch", e.epoch},
                              {"train_loss", e.train_loss},
                              {"train_accuracy", e.train_accuracy},
                              {"test_accuracy", e.test_accuracy}}
                     .dump()
              << '\n';
  }
  ordered_json doc{{"test_accuracy", report.test_accuracy},
                   {"train_accuracy", report.train_accuracy},
                   {"train_docs", report.train_docs},
                   {"test_docs", report.test_docs},
                   {"num_classes", report.num_classes},
                   {"epochs", report.history.size()},
                   {"max_marginal_gap", report.max_marginal_gap},
                   {"degenerate_labels", report.degenerate_labels}};
  if (report.degenerate_labels) {
    const std::string warning = "corpus has a single class; accuracy is trivially 1.0";
    std::cerr << "warning: " << warning << '\n';
    doc["warning"] = warning;
  }
  emit(doc);
  return kExitOk;
}

int cmd_synth_ratings(const fs::path& out_path, std::uint64_t seed, std::size_t users,
                      std::size_t items, std::size_t count) {
  igraph::rec::PlantedOptions opts;
  opts.num_users = users;
  opts.num_items = items;
  opts.num_observations = count;
  const auto planted = igraph::rec::make_planted_ratings({}, opts, seed);
  std::ofstream out(out_path);
  if (!out) throw igraph::ConfigError("--out: cannot write " + out_path.string());
  igraph::write_movielens(out, planted.ratings);
  emit({{"path", out_path.string()}, {"ratings", planted.ratings.size()}});
  return kExitOk;
}

int cmd_synth_corpus(const fs::path& out_path, std::uint64_t seed, std::size_t docs) {
  const auto corpus = igraph::textclf::make_planted_corpus(docs, seed);
  std::ofstream out(out_path);
  if (!out) throw igraph::ConfigError("--out: cannot write " + out_path.string());
  igraph::textclf::write_corpus(out, corpus);
  emit({{"path", out_path.string()}, {"documents", corpus.documents.size()}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-matching recommender built on a neural/probabilistic computation graph"};
  app.require_subcommand(1);
  std::string isa = "auto";
  app.add_option("--isa", isa, "Kernel variant: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  std::string config, checkpoint, data, user, item, out;
  std::optional<std::string> fault;
  std::uint64_t seed = igraph::verify::Options{}.seed;
  std::size_t users = 100, items = 80, count = 2000, docs = 200;

  auto* train = app.add_subcommand("train", "Train the recommender described by a config file");
  train->add_option("--config", config, "Run config (JSON)")->required();
  train->add_option("--data", data, "Ratings file overriding the config's data_path");

  auto* eval = app.add_subcommand("eval", "RMSE/MAE of a checkpoint on a ratings file");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data)->required();

  auto* predict = app.add_subcommand("predict", "Predicted rating for one (user, item) pair");
  predict->add_option("--checkpoint", checkpoint)->required();
  predict->add_option("--user", user, "User id as it appears in the data")->required();
  predict->add_option("--item", item, "Item id as it appears in the data")->required();

  auto* verify = app.add_subcommand("verify", "Run the gradient, inference and invariant suites");
  verify->add_option("--inject-fault", fault, "Flip the sign of one op's gradient rule (mutation test)");
  verify->add_option("--seed", seed);

  auto* demo = app.add_subcommand("demo-textclf", "Train the topic-model text classifier");
  demo->add_option("--data", data, "Corpus: label<TAB>tokens per line")->required();
  demo->add_option("--config", config, "Demo config (JSON)");

  auto* synth_ratings = app.add_subcommand("synth-ratings", "Write ratings planted from a random model");
  synth_ratings->add_option("--out", out)->required();
  synth_ratings->add_option("--seed", seed);
  synth_ratings->add_option("--users", users);
  synth_ratings->add_option("--items", items);
  synth_ratings->add_option("--count", count);

  auto* synth_corpus = app.add_subcommand("synth-corpus", "Write a planted two-topic corpus");
  synth_corpus->add_option("--out", out)->required();
  synth_corpus->add_option("--seed", seed);
  synth_corpus->add_option("--docs", docs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (isa != "auto") {
      igraph::kernels::select_isa(isa == "avx2" ? igraph::kernels::Isa::kAvx2
                                                : igraph::kernels::Isa::kScalar);
    }
    if (*train) return cmd_train(config, data.empty() ? std::nullopt : std::optional<fs::path>(data));
    if (*eval) return cmd_eval(checkpoint, data);
    if (*predict) return cmd_predict(checkpoint, user, item);
    if (*verify) return cmd_verify(fault, seed);
    if (*demo) return cmd_demo(data, config.empty() ? std::nullopt : std::optional<fs::path>(config));
    if (*synth_ratings) return cmd_synth_ratings(out, seed, users, items, count);
    if (*synth_corpus) return cmd_synth_corpus(out, seed, docs);
  } catch (const igraph::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const igraph::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
