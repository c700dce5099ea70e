// dive: curation and evaluation pipelines for visual commonsense graphs.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
// failure. DIVE_THREADS caps the worker count of the parallel stages.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dive/contrastive.hpp"
#include "dive/embeddings.hpp"
#include "dive/error.hpp"
#include "dive/filtering.hpp"
#include "dive/gradcheck.hpp"
#include "dive/graph.hpp"
#include "dive/metrics.hpp"
#include "dive/subsets.hpp"
#include "dive/trainer.hpp"

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw dive::DataError("cannot write " + path);
  }
  out << content;
}

struct IngestArgs {
  std::string graph, emb, out;
};

int run_ingest(const IngestArgs& a) {
  const dive::EmbeddingMatrix emb = dive::EmbeddingMatrix::load(a.emb);
  const dive::VisualCommonsenseGraph g = dive::ingest_jsonl(a.graph, emb);
  dive::write_jsonl(g, a.out);
  std::cerr << "ingest: " << g.images().size() << " images, "
            << g.edges().size() << " edges -> " << a.out << "\n";
  return 0;
}

struct StatsArgs {
  std::string graph, out;
  std::string emb;
  std::size_t top_k = 10;
};

int run_stats(const StatsArgs& a) {
  const dive::VisualCommonsenseGraph g =
      a.emb.empty()
          ? dive::ingest_jsonl(a.graph)
          : dive::ingest_jsonl(a.graph, dive::EmbeddingMatrix::load(a.emb));
  const dive::StatsReport report = dive::graph_stats(g, a.top_k);
  write_text_file(a.out, dive::to_json_string(report) + "\n");
  std::cerr << "stats: " << report.images << " images, " << report.edges
            << " edges, " << report.distinct_descriptions
            << " descriptions -> " << a.out << "\n";
  return 0;
}

struct FilterArgs {
  std::string graph, emb, out, report;
  double t = 10.0;
};

int run_filter(const FilterArgs& a) {
  const dive::EmbeddingMatrix emb = dive::EmbeddingMatrix::load(a.emb);
  const dive::VisualCommonsenseGraph g = dive::ingest_jsonl(a.graph, emb);
  const auto [filtered, report] = dive::apply_filter(g, emb, a.t);
  dive::write_jsonl(filtered, a.out);
  if (!a.report.empty()) {
    write_text_file(a.report, dive::to_json_string(report) + "\n");
  }
  std::cerr << "filter: t=" << a.t << ", " << report.edges_before << " -> "
            << report.edges_after << " edges -> " << a.out << "\n";
  return 0;
}

struct SweepArgs {
  std::string graph, emb, out;
  std::vector<double> thresholds;
};

int run_sweep(const SweepArgs& a) {
  const dive::EmbeddingMatrix emb = dive::EmbeddingMatrix::load(a.emb);
  const dive::VisualCommonsenseGraph g = dive::ingest_jsonl(a.graph, emb);
  const auto entries = dive::threshold_sweep(g, emb, a.thresholds);
  write_text_file(a.out, dive::to_json_string(entries) + "\n");
  std::cerr << "sweep: " << entries.size() << " thresholds -> " << a.out
            << "\n";
  return 0;
}

struct SubsetArgs {
  std::string kind, val, train, out, report;
  std::size_t min_desc = 5;
};

int run_subset(const SubsetArgs& a) {
  dive::SubsetSpec spec;
  spec.min_descriptions_per_image = a.min_desc;
  const dive::VisualCommonsenseGraph val = dive::ingest_jsonl(a.val);
  dive::VisualCommonsenseGraph subset;
  dive::SubsetReport report;
  if (a.kind == "unique") {
    spec.kind = dive::SubsetKind::kUnique;
    std::tie(subset, report) = dive::build_unique_subset(val, spec);
  } else if (a.kind == "novel") {
    spec.kind = dive::SubsetKind::kNovel;
    if (a.train.empty()) {
      throw CLI::ValidationError("--train is required for --kind novel");
    }
    const dive::VisualCommonsenseGraph train = dive::ingest_jsonl(a.train);
    std::tie(subset, report) = dive::build_novel_subset(val, train, spec);
  } else {
    throw CLI::ValidationError("--kind must be unique or novel");
  }
  dive::write_jsonl(subset, a.out);
  if (!a.report.empty()) {
    write_text_file(a.report, dive::to_json_string(report) + "\n");
  }
  std::cerr << "subset: " << a.kind << ", " << report.images_kept
            << " images / " << report.edges_kept << " edges -> " << a.out
            << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string corpus, refs, train_graph, out;
};

int run_evaluate(const EvaluateArgs& a) {
  const dive::GeneratedCorpus corpus = dive::load_corpus_jsonl(a.corpus);
  const dive::ReferenceTable refs = dive::ReferenceTable::load_jsonl(a.refs);
  const dive::VisualCommonsenseGraph train = dive::ingest_jsonl(a.train_graph);
  const dive::UnigramModel unigram = dive::UnigramModel::from_graph(train);
  std::unordered_set<std::string> train_descriptions;
  for (const auto& d : train.descriptions()) {
    train_descriptions.insert(d.normalized_text);
  }
  const dive::MetricsReport report =
      dive::evaluate_corpus(corpus, refs, unigram, train_descriptions);
  write_text_file(a.out, dive::to_json_string(report) + "\n");
  std::cerr << "evaluate: " << corpus.size() << " inferences, unique="
            << report.unique_pct << "%, novel=" << report.novel_pct
            << "% -> " << a.out << "\n";
  return 0;
}

struct RetrievalArgs {
  std::string text_emb, image_emb, out;
  std::vector<std::size_t> ks = {1, 5, 10};
};

int run_retrieval_eval(const RetrievalArgs& a) {
  const dive::EmbeddingMatrix texts = dive::EmbeddingMatrix::load(a.text_emb);
  const dive::EmbeddingMatrix images =
      dive::EmbeddingMatrix::load(a.image_emb);
  // The text sidecar id names each row's true image.
  std::vector<std::size_t> truth(texts.rows());
  for (std::size_t i = 0; i < texts.rows(); ++i) {
    const auto row = images.row_of(texts.row_id(i));
    if (!row) {
      throw dive::DataError("text row '" + texts.row_id(i) +
                            "' has no image in the pool");
    }
    truth[i] = *row;
  }
  const dive::RetrievalReport report =
      dive::retrieval_eval(texts, images, truth, a.ks);
  write_text_file(a.out, dive::to_json_string(report) + "\n");
  std::cerr << "retrieval-eval: " << texts.rows() << " texts vs "
            << images.rows() << " images -> " << a.out << "\n";
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 7;
  int trials = 5;
  double step = 1e-5;
  double tol = 1e-5;
  std::string out;
};

int run_gradcheck(const GradcheckArgs& a) {
  dive::GradCheckConfig config;
  config.seed = a.seed;
  config.trials = a.trials;
  config.fd_step = a.step;
  config.tolerance = a.tol;
  const dive::GradCheckReport report = dive::run_gradient_check(config);
  if (!a.out.empty()) {
    std::string json = "{\n  \"max_rel_error\": " +
                       std::to_string(report.max_rel_error) +
                       ",\n  \"worst_tensor\": \"" + report.worst_tensor +
                       "\",\n  \"trials\": " +
                       std::to_string(report.trials.size()) + "\n}\n";
    write_text_file(a.out, json);
  }
  std::fprintf(stderr, "gradcheck: max relative error %.3e (tensor %s)\n",
               report.max_rel_error, report.worst_tensor.c_str());
  std::printf("%.17g\n", report.max_rel_error);
  return report.passed(config.tolerance) ? 0 : 3;
}

struct TrainArgs {
  std::string data, trace, checkpoint, dump_data;
  bool synthetic = false;
  std::size_t clusters = 8;
  std::size_t per_cluster = 4;
  std::size_t dim = 12;
  double offset = 1.0;
  dive::TrainConfig config;
};

int run_train_toy(TrainArgs& a) {
  if (a.data.empty() == !a.synthetic) {
    throw CLI::ValidationError("pass exactly one of --data or --synthetic");
  }
  dive::ToyDataset data;
  if (a.synthetic) {
    dive::SyntheticClustersConfig sc;
    sc.clusters = a.clusters;
    sc.images_per_cluster = a.per_cluster;
    sc.dim = a.dim;
    sc.offset_scale = a.offset;
    sc.seed = a.config.seed;
    data = dive::make_synthetic_clusters(sc);
  } else {
    data = dive::load_toy_dataset_jsonl(a.data);
  }
  if (!a.dump_data.empty()) {
    dive::write_toy_dataset_jsonl(data, a.dump_data);
  }
  const dive::TrainResult result = dive::train_toy(data, a.config);
  dive::write_trace_csv(result.trace, a.trace);
  if (!a.checkpoint.empty()) {
    result.params.save(a.checkpoint);
  }
  const double final_acc =
      result.trace.empty() ? 0.0 : result.trace.back().retrieval_acc;
  std::cerr << "train-toy: " << result.train_items << " train / "
            << result.holdout_items << " holdout items, "
            << result.trace.size() << " epochs, retrieval_acc=" << final_acc
            << " -> " << a.trace << "\n";
  return 0;
}

struct EntropyArgs {
  std::string corpus, train_graph, out;
  double bin_width = 2.0;
};

int run_report_entropy(const EntropyArgs& a) {
  const dive::GeneratedCorpus corpus = dive::load_corpus_jsonl(a.corpus);
  const dive::VisualCommonsenseGraph train = dive::ingest_jsonl(a.train_graph);
  const dive::UnigramModel unigram = dive::UnigramModel::from_graph(train);
  const dive::EntropyHistogram hist =
      dive::entropy_histogram(corpus, unigram, a.bin_width);
  write_text_file(a.out, dive::to_json_string(hist) + "\n");
  std::cerr << "report-entropy: " << corpus.size() << " inferences, "
            << hist.bins.size() << " bins -> " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curation and evaluation toolkit for visual commonsense "
               "graphs: generic-inference filtering, evaluation subsets, "
               "descriptiveness/diversity metrics and a gradient-verified "
               "contrastive toy trainer."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value config file; flags override it");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand(
      "ingest", "Validate a graph JSONL against embeddings and re-emit it in "
                "canonical form");
  ingest->add_option("--graph", ingest_args.graph, "graph JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--emb", ingest_args.emb, "embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_args.out, "canonical JSONL output")
      ->required();

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Graph statistics report");
  stats->add_option("--graph", stats_args.graph, "graph JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  stats->add_option("--emb", stats_args.emb,
                    "embedding file (optional, validates coverage)")
      ->check(CLI::ExistingFile);
  stats->add_option("--top", stats_args.top_k, "top-k most frequent descriptions");
  stats->add_option("--out", stats_args.out, "JSON report path")->required();

  FilterArgs filter_args;
  auto* filter = app.add_subcommand(
      "filter", "Remove generic inferences by frequency and semantic "
                "concentration");
  filter->add_option("--graph", filter_args.graph, "graph JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  filter->add_option("--emb", filter_args.emb, "embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  filter->add_option("--t", filter_args.t, "filtering threshold")
      ->capture_default_str();
  filter->add_option("--out", filter_args.out, "filtered graph JSONL")
      ->required();
  filter->add_option("--report", filter_args.report, "JSON report path");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Filter at several thresholds");
  sweep->add_option("--graph", sweep_args.graph, "graph JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--emb", sweep_args.emb, "embedding file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--thresholds", sweep_args.thresholds,
                    "comma-separated thresholds")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", sweep_args.out, "JSON report path")->required();

  SubsetArgs subset_args;
  auto* subset = app.add_subcommand(
      "subset", "Build the unique or novel evaluation subset");
  subset->add_option("--kind", subset_args.kind, "unique | novel")
      ->required();
  subset->add_option("--val", subset_args.val, "validation graph JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  subset->add_option("--train", subset_args.train,
                     "training graph JSONL (novel only)")
      ->check(CLI::ExistingFile);
  subset
      ->add_option("--min-desc", subset_args.min_desc,
                   "minimum distinct descriptions per kept image")
      ->capture_default_str();
  subset->add_option("--out", subset_args.out, "subset JSONL")->required();
  subset->add_option("--report", subset_args.report, "JSON report path");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Descriptiveness/diversity metrics for a generated corpus");
  evaluate->add_option("--corpus", eval_args.corpus, "generated corpus JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--refs", eval_args.refs, "references JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate
      ->add_option("--train-graph", eval_args.train_graph,
                   "training graph JSONL for the unigram model and novelty")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_args.out, "JSON report path")->required();

  RetrievalArgs retr_args;
  auto* retrieval = app.add_subcommand(
      "retrieval-eval", "Recall@k of text embeddings against an image pool; "
                        "each text row's sidecar id names its true image");
  retrieval->add_option("--text-emb", retr_args.text_emb, "text embeddings")
      ->required()
      ->check(CLI::ExistingFile);
  retrieval
      ->add_option("--image-emb", retr_args.image_emb, "image embeddings")
      ->required()
      ->check(CLI::ExistingFile);
  retrieval->add_option("--k", retr_args.ks, "comma-separated k values")
      ->delimiter(',')
      ->capture_default_str();
  retrieval->add_option("--out", retr_args.out, "JSON report path")
      ->required();

  GradcheckArgs grad_args;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against finite differences; "
                   "prints the max relative error, exit 3 on failure");
  gradcheck->add_option("--seed", grad_args.seed, "base seed")
      ->capture_default_str();
  gradcheck->add_option("--trials", grad_args.trials, "random instances")
      ->capture_default_str();
  gradcheck->add_option("--step", grad_args.step, "finite-difference step")
      ->capture_default_str();
  gradcheck->add_option("--tol", grad_args.tol, "max relative error allowed")
      ->capture_default_str();
  gradcheck->add_option("--out", grad_args.out, "JSON report path");

  TrainArgs train_args;
  auto* train = app.add_subcommand(
      "train-toy", "Train the toy contrastive model on a dataset or the "
                   "built-in synthetic clusters");
  train->add_option("--data", train_args.data, "toy dataset JSONL")
      ->check(CLI::ExistingFile);
  train->add_flag("--synthetic", train_args.synthetic,
                  "generate the synthetic cluster dataset instead of --data");
  train->add_option("--clusters", train_args.clusters, "synthetic clusters")
      ->capture_default_str();
  train
      ->add_option("--per-cluster", train_args.per_cluster,
                   "synthetic images per cluster")
      ->capture_default_str();
  train->add_option("--dim", train_args.dim, "synthetic feature width")
      ->capture_default_str();
  train->add_option("--offset", train_args.offset,
                    "synthetic within-cluster spread")
      ->capture_default_str();
  train->add_option("--lambda", train_args.config.lambda,
                    "contrastive loss weight")
      ->capture_default_str();
  train->add_option("--lr", train_args.config.lr, "learning rate")
      ->capture_default_str();
  train->add_option("--epochs", train_args.config.epochs, "epochs")
      ->capture_default_str();
  train->add_option("--batch", train_args.config.batch, "batch size")
      ->capture_default_str();
  train->add_option("--seed", train_args.config.seed, "seed")
      ->capture_default_str();
  train->add_option("--holdout", train_args.config.holdout_fraction,
                    "holdout fraction for the retrieval trace")
      ->capture_default_str();
  train->add_option("--rounds", train_args.config.sampling_rounds,
                    "item sampling passes")
      ->capture_default_str();
  train->add_option("--h-size", train_args.config.h_size, "|H| per item")
      ->capture_default_str();
  train->add_option("--d-e", train_args.config.d_e, "token embedding width")
      ->capture_default_str();
  train->add_option("--d-h", train_args.config.d_h, "hidden width")
      ->capture_default_str();
  train->add_option("--d-r", train_args.config.d_r, "retrieval space width")
      ->capture_default_str();
  train->add_option("--trace", train_args.trace, "trace CSV output")
      ->required();
  train->add_option("--checkpoint", train_args.checkpoint,
                    "model checkpoint output");
  train->add_option("--dump-data", train_args.dump_data,
                    "write the (possibly synthetic) dataset JSONL here");

  EntropyArgs entropy_args;
  auto* entropy = app.add_subcommand(
      "report-entropy", "Word-level entropy histogram of a generated corpus");
  entropy->add_option("--corpus", entropy_args.corpus, "generated corpus JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  entropy
      ->add_option("--train-graph", entropy_args.train_graph,
                   "training graph JSONL for the unigram model")
      ->required()
      ->check(CLI::ExistingFile);
  entropy->add_option("--bin-width", entropy_args.bin_width, "histogram bin width")
      ->capture_default_str();
  entropy->add_option("--out", entropy_args.out, "JSON histogram path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // exits 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (ingest->parsed()) return run_ingest(ingest_args);
    if (stats->parsed()) return run_stats(stats_args);
    if (filter->parsed()) return run_filter(filter_args);
    if (sweep->parsed()) return run_sweep(sweep_args);
    if (subset->parsed()) return run_subset(subset_args);
    if (evaluate->parsed()) return run_evaluate(eval_args);
    if (retrieval->parsed()) return run_retrieval_eval(retr_args);
    if (gradcheck->parsed()) return run_gradcheck(grad_args);
    if (train->parsed()) return run_train_toy(train_args);
    if (entropy->parsed()) return run_report_entropy(entropy_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dive::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const dive::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
