// cxrl: train agents, answer contrastive queries headlessly, serve the session API.
#include <csignal>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <pthread.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cxrl/agent.hpp"
#include "cxrl/format.hpp"
#include "cxrl/interpretable.hpp"
#include "cxrl/pipeline.hpp"
#include "cxrl/service.hpp"

namespace {

using namespace cxrl;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

struct TrainArgs {
  std::string layout;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
};

int cmd_train(const TrainArgs& a) {
  const GridLayout layout = load_layout_file(a.layout);
  LearningConfig config =
      a.config.empty() ? LearningConfig{} : learning_config_from_json(nlohmann::json::parse(read_text(a.config)));
  if (a.seed) config.seed = *a.seed;
  if (a.episodes) config.episodes = *a.episodes;
  config.validate();
  if (config.episodes == 0) std::cerr << "warning: untrained table (episodes = 0)\n";

  EmpiricalModel model;
  const TrainingResult result = train(layout, config, &model);
  save_qtable(result.q, a.out + ".qtab");
  save_tmodel(model, a.out + ".tmodel");

  const auto& returns = result.episode_returns;
  const std::size_t window = std::min<std::size_t>(1000, returns.size());
  std::cout << "episodes: " << returns.size() << "\n";
  if (window > 0) {
    std::cout << "mean return, first " << window << ": "
              << format_fixed(mean(std::span(returns).first(window)), 3) << "\n";
    std::cout << "mean return, last " << window << ": "
              << format_fixed(mean(std::span(returns).last(window)), 3) << "\n";
  }
  std::cout << "q-table rows: " << result.q.size() << "\n";
  std::cout << "transition samples: " << model.total_samples() << "\n";
  std::cout << "wrote " << a.out << ".qtab and " << a.out << ".tmodel\n";
  return 0;
}

struct ExplainArgs {
  std::string layout;
  std::string qtab;
  std::string tmodel;
  std::string query;
  std::string query_file;
  std::string start;
  std::string transitions;
  double lambda = 0.9;
  std::optional<double> sigma;
  std::optional<double> epsilon;
  std::optional<double> lambda_f;
  std::optional<int> horizon;
  std::optional<int> rollouts;
  std::uint64_t seed = 0;
  std::string mode = "most-probable";
  std::string contrast = "symmetric";
  std::string foil_mode = "reward_gap";
  std::string format = "text";
  std::optional<double> threshold;
  bool allow_short_horizon = false;
};

int cmd_explain(const ExplainArgs& a) {
  if (a.query.empty() == a.query_file.empty()) throw std::invalid_argument("give exactly one of --query or --query-file");
  const GridWorld world(load_layout_file(a.layout));
  const QTable q_t = load_qtable(a.qtab);
  const EmpiricalModel model = a.tmodel.empty() ? EmpiricalModel() : load_tmodel(a.tmodel);

  const std::string choice_name = !a.transitions.empty() ? a.transitions : a.tmodel.empty() ? "true" : "learned_with_fallback";
  const auto choice = parse_transition_choice(choice_name);
  if (!choice) throw std::invalid_argument("--transitions must be learned, learned_with_fallback or true");
  const TrueTransitions truth(world);
  const LearnedTransitions learned(model, world, *choice == TransitionChoice::LearnedWithFallback ? &truth : nullptr);
  const TransitionSource& source = *choice == TransitionChoice::True ? static_cast<const TransitionSource&>(truth)
                                                                      : learned;
  const RuleTranslator translator(world.layout());

  std::string text = a.query;
  if (!a.query_file.empty()) {
    text = read_text(a.query_file);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  }
  FoilQuery query;
  try {
    query = parse_query(text);
  } catch (const QueryError& e) {
    std::cerr << "error: " << e.what() << "\n  " << text << "\n  " << std::string(e.column() - 1, ' ') << "^\n";
    return 2;
  }

  nlohmann::json overrides{{"seed", a.seed}, {"simulation", a.mode}, {"contrast", a.contrast}, {"mode", a.foil_mode}};
  if (a.sigma) overrides["sigma"] = *a.sigma;
  if (a.epsilon) overrides["epsilon"] = *a.epsilon;
  if (a.lambda_f) overrides["lambda_f"] = *a.lambda_f;
  if (a.horizon) overrides["horizon"] = *a.horizon;
  if (a.rollouts) overrides["rollouts"] = *a.rollouts;
  if (a.threshold) overrides["threshold"] = *a.threshold;
  if (a.allow_short_horizon) overrides["allow_short_horizon"] = true;
  const ExplainOptions options = apply_overrides(ExplainOptions{}, overrides);

  EnvState start = world.initial_state();
  if (!a.start.empty()) start = decode_state(a.start);

  const ExplainContext ctx{world, q_t, source, translator, a.lambda};
  const Explanation e = explain(ctx, query, start, options);
  if (a.format == "structured") {
    std::cout << to_payload(e, options).dump(2) << "\n";
  } else {
    std::cout << to_text(e, options);
  }
  return 0;
}

struct ServeArgs {
  std::string layout;
  std::string qtab;
  std::string tmodel;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 0;
  std::string snapshot_dir;
};

int cmd_serve(const ServeArgs& a) {
  // Signals are taken synchronously below, so block them before any thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  SessionService service;
  if (!a.snapshot_dir.empty() && std::filesystem::is_directory(a.snapshot_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(a.snapshot_dir)) {
      if (!std::filesystem::exists(entry.path() / "session.json")) continue;
      const std::string id = service.restore_snapshot(entry.path());
      std::cerr << "restored " << entry.path().filename().string() << " as session " << id << "\n";
    }
  }
  if (!a.layout.empty()) {
    nlohmann::json request{{"layout", read_text(a.layout)}, {"seed", a.seed}};
    if (!a.qtab.empty()) request["qtab"] = read_text(a.qtab);
    if (!a.tmodel.empty()) request["tmodel"] = read_text(a.tmodel);
    const Response r = service.create_session(request);
    if (r.status >= 400) throw std::runtime_error(r.body.dump());
    std::cerr << "session " << r.body["id"].get<std::string>() << " ready\n";
  }

  HttpServer server(service);
  const int port = server.start(a.host, a.port);
  std::cerr << "listening on http://" << a.host << ":" << port << "/v1\n";
  int received = 0;
  sigwait(&signals, &received);
  server.stop();

  if (!a.snapshot_dir.empty()) {
    for (const auto& id : service.session_ids()) {
      service.save_snapshot(id, std::filesystem::path(a.snapshot_dir) / id);
    }
    std::cerr << "saved snapshots to " << a.snapshot_dir << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string layout;
  std::string qtab;
  double lambda = 0.9;
  double tolerance = 1e-10;
};

int cmd_eval(const EvalArgs& a) {
  const GridWorld world(load_layout_file(a.layout));
  const QTable q = load_qtable(a.qtab);
  const double greedy = policy_value(world, greedy_policy(q, world), world.initial_state(), a.lambda, a.tolerance);
  const ValueIterationResult vi = value_iteration(world, a.lambda, a.tolerance);
  const double optimal = vi.values.at(world.initial_state());
  std::cout << "greedy\tvalue_iteration\n";
  std::cout << format_compact(greedy, 4) << "\t" << format_compact(optimal, 4) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive explanations for a tabular Q-learning agent"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train Q_t and record a transition model");
  train_cmd->add_option("--layout", train_args.layout, "Grid layout file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", train_args.config, "Learning config (JSON)")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_args.out, "Output prefix for .qtab and .tmodel")->required();
  train_cmd->add_option("--seed", train_args.seed, "Overrides the config seed");
  train_cmd->add_option("--episodes", train_args.episodes, "Overrides the config episode count");

  ExplainArgs ex;
  auto* explain_cmd = app.add_subcommand("explain", "Answer a contrastive query");
  explain_cmd->add_option("--layout", ex.layout)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--qtab", ex.qtab)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--tmodel", ex.tmodel, "Learned transition model")->check(CLI::ExistingFile);
  explain_cmd->add_option("--query", ex.query, "Query, e.g. \"do Right until next_to_wall; do Up\"");
  explain_cmd->add_option("--query-file", ex.query_file)->check(CLI::ExistingFile);
  explain_cmd->add_option("--start", ex.start, "Start state \"x,y;mx,my;Running\" (default: layout start)");
  explain_cmd->add_option("--transitions", ex.transitions, "learned | learned_with_fallback | true");
  explain_cmd->add_option("--lambda", ex.lambda, "Discount factor Q_t was trained with")->capture_default_str();
  explain_cmd->add_option("--sigma", ex.sigma);
  explain_cmd->add_option("--epsilon", ex.epsilon);
  explain_cmd->add_option("--lambda-f", ex.lambda_f);
  explain_cmd->add_option("--horizon", ex.horizon);
  explain_cmd->add_option("--rollouts", ex.rollouts);
  explain_cmd->add_option("--threshold", ex.threshold, "Outcome probability threshold");
  explain_cmd->add_flag("--allow-short-horizon", ex.allow_short_horizon);
  explain_cmd->add_option("--seed", ex.seed)->capture_default_str();
  explain_cmd->add_option("--mode", ex.mode)->check(CLI::IsMember({"most-probable", "sampled"}))->capture_default_str();
  explain_cmd->add_option("--contrast", ex.contrast)->check(CLI::IsMember({"complement", "symmetric"}))->capture_default_str();
  explain_cmd->add_option("--foil-mode", ex.foil_mode)
      ->check(CLI::IsMember({"reward_gap", "guarantee_adoption"}))
      ->capture_default_str();
  explain_cmd->add_option("--format", ex.format)->check(CLI::IsMember({"text", "structured"}))->capture_default_str();

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
  serve_cmd->add_option("--layout", sv.layout, "Create an initial session from this layout")->check(CLI::ExistingFile);
  serve_cmd->add_option("--qtab", sv.qtab)->check(CLI::ExistingFile);
  serve_cmd->add_option("--tmodel", sv.tmodel)->check(CLI::ExistingFile);
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  serve_cmd->add_option("--seed", sv.seed)->capture_default_str();
  serve_cmd->add_option("--snapshot-dir", sv.snapshot_dir, "Restore sessions from and save them to this directory");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare the greedy return with the value-iteration optimum");
  eval_cmd->add_option("--layout", ev.layout)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--qtab", ev.qtab)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--lambda", ev.lambda)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (explain_cmd->parsed()) return cmd_explain(ex);
    if (serve_cmd->parsed()) return cmd_serve(sv);
    if (eval_cmd->parsed()) return cmd_eval(ev);
  } catch (const ParseError& e) {
    std::cerr << "error: layout line " << e.line() << ", column " << e.column() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
