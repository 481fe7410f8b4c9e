/* Copyright 2026 The entgate Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "entgate/budget.hpp"
#include "entgate/calibration_file.hpp"
#include "entgate/client.hpp"
#include "entgate/error.hpp"
#include "entgate/gateway.hpp"
#include "entgate/replay.hpp"
#include "entgate/synth.hpp"
#include "entgate/threshold.hpp"
#include "entgate/trace.hpp"
#include "entgate/transport.hpp"

namespace entgate::cli {
namespace {

std::atomic<bool> g_stop_requested{false};

extern "C" void HandleStopSignal(int) { g_stop_requested.store(true); }

std::string Fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

ThresholdMethod RequireMethod(const std::string& name) {
  const auto m = ParseMethod(name);
  if (!m) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown method '" + name +
                    "' (expected mean, info_optimal, bayes_optimal or scale_universal)");
  }
  return *m;
}

// Writes through `fallback` when `path` is empty or "-".
void WithOutput(const std::string& path, std::ostream& fallback,
                const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + path);
  fn(file);
  if (!file) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

std::size_t ResolveK(const TraceSet& traces, std::size_t k) {
  return k == 0 ? traces.k_logprobs : k;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

double ParseNumber(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, where + ": not a number: '" + text + "'");
  }
}

// Few-shot labels: `entropy,correct` rows, correct as 1/0 or true/false.
std::vector<LabeledEntropy> LoadSamplesCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::vector<LabeledEntropy> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("entropy", 0) == 0) continue;
    const auto cells = SplitCsvLine(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != 2) throw Error(ErrorCode::kParseError, where + ": expected 2 fields");
    LabeledEntropy s;
    s.entropy = ParseNumber(cells[0], where);
    if (cells[1] == "1" || cells[1] == "true") {
      s.correct = true;
    } else if (cells[1] != "0" && cells[1] != "false") {
      throw Error(ErrorCode::kParseError, where + ": label must be 0/1 or true/false");
    }
    out.push_back(s);
  }
  return out;
}

// `question_id,entropy` rows, any order.
std::vector<std::pair<std::string, double>> LoadOrderCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("question_id", 0) == 0) continue;
    const auto cells = SplitCsvLine(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (cells.size() != 2) throw Error(ErrorCode::kParseError, where + ": expected 2 fields");
    out.emplace_back(cells[0], ParseNumber(cells[1], where));
  }
  return out;
}

void PrintDecision(std::ostream& out, const ThresholdDecision& d) {
  const CalibrationStats& s = d.stats;
  out << "method " << MethodName(d.method) << "\n"
      << "tau " << Fmt(d.tau) << "\n"
      << "mu_c " << Fmt(s.mu_c) << "\n"
      << "sigma_c " << Fmt(s.sigma_c) << "\n"
      << "n_c " << s.n_c << "\n"
      << "mu_i " << Fmt(s.mu_i) << "\n"
      << "sigma_i " << Fmt(s.sigma_i) << "\n"
      << "n_i " << s.n_i << "\n"
      << "d " << Fmt(s.d) << "\n";
  if (!d.notes.empty()) out << "notes " << d.notes << "\n";
}

struct EndpointFlags {
  std::string base_url;
  std::string model;
  std::string api_key_env = "ENTGATE_API_KEY";
  double temperature = 0.7;
  std::size_t max_tokens = 8192;
  std::size_t top_logprobs = 20;
  std::size_t max_steps = 4;
  std::int64_t timeout_ms = 600000;
  std::size_t retries = 3;
  std::int64_t backoff_ms = 500;
  std::string extra_body = "{}";
  std::size_t concurrency = 1;

  void Register(CLI::App* app) {
    app->add_option("--endpoint", base_url, "Base URL, e.g. http://host:8000/v1")
        ->required();
    app->add_option("--model", model, "Model name sent upstream")->required();
    app->add_option("--api-key-env", api_key_env,
                    "Environment variable holding the API key");
    app->add_option("--temperature", temperature)->capture_default_str();
    app->add_option("--max-tokens", max_tokens, "Token cap per step")
        ->capture_default_str();
    app->add_option("--top-logprobs", top_logprobs)->capture_default_str();
    app->add_option("--max-steps", max_steps)->capture_default_str();
    app->add_option("--timeout-ms", timeout_ms)->capture_default_str();
    app->add_option("--retries", retries)->capture_default_str();
    app->add_option("--backoff-ms", backoff_ms)->capture_default_str();
    app->add_option("--extra-body", extra_body,
                    "JSON object merged into every request body");
    app->add_option("--concurrency", concurrency, "Questions in flight")
        ->capture_default_str();
  }

  EndpointConfig Build() const {
    EndpointConfig e;
    e.base_url = base_url;
    e.model = model;
    if (const char* key = std::getenv(api_key_env.c_str())) e.api_key = key;
    e.temperature = temperature;
    e.max_tokens_per_step = max_tokens;
    e.top_logprobs = top_logprobs;
    e.max_steps = max_steps;
    e.request_timeout = std::chrono::milliseconds(timeout_ms);
    e.retry.max_retries = retries;
    e.retry.backoff = std::chrono::milliseconds(backoff_ms);
    e.extra_body = extra_body;
    e.Validate();
    return e;
  }
};

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-gated early stopping for multi-step LLM reasoning", "entgate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "entgate 0.1.0");

  // calibrate
  std::string traces_path, samples_path, method_name = "mean", cal_out = "calibration.csv";
  std::size_t k = 0;
  bool allow_undersampled = false;
  std::uint64_t seed = 0;
  auto* calibrate = app.add_subcommand("calibrate", "Derive tau from labeled entropies");
  auto* cal_src = calibrate->add_option_group("source");
  cal_src->add_option("--traces", traces_path, "Trace file (step-1 labels)");
  cal_src->add_option("--samples", samples_path, "CSV of entropy,correct rows");
  cal_src->require_option(1);
  calibrate->add_option("--method", method_name)->capture_default_str();
  calibrate->add_option("--k", k, "Alternatives per token (default: recorded k)");
  calibrate->add_flag("--allow-undersampled", allow_undersampled,
                      "Run below the method's sample floor");
  calibrate->add_option("--out", cal_out, "Calibration file to write")
      ->capture_default_str();
  calibrate->add_option("--seed", seed, "Accepted for uniformity; unused");

  // replay
  std::string report_out, calibration_in;
  std::size_t bootstrap_iters = 1000, workers = 1;
  auto* replay = app.add_subcommand("replay", "Replay gating over recorded traces");
  replay->add_option("--traces", traces_path)->required();
  replay->add_option("--method", method_name)->capture_default_str();
  replay->add_option("--calibration", calibration_in,
                     "Use tau from this calibration file instead of calibrating");
  replay->add_option("--k", k);
  replay->add_flag("--allow-undersampled", allow_undersampled);
  replay->add_option("--bootstrap", bootstrap_iters)->capture_default_str();
  replay->add_option("--workers", workers)->capture_default_str();
  replay->add_option("--seed", seed)->capture_default_str();
  replay->add_option("--out", report_out, "CSV destination (default stdout)");

  // sweep-methods
  auto* sweep_methods =
      app.add_subcommand("sweep-methods", "Compare all threshold methods");
  sweep_methods->add_option("--traces", traces_path)->required();
  sweep_methods->add_option("--k", k);
  sweep_methods->add_flag("--allow-undersampled", allow_undersampled);
  sweep_methods->add_option("--bootstrap", bootstrap_iters)->capture_default_str();
  sweep_methods->add_option("--workers", workers)->capture_default_str();
  sweep_methods->add_option("--seed", seed)->capture_default_str();
  sweep_methods->add_option("--out", report_out);

  // sweep-k
  std::vector<std::size_t> ks;
  auto* sweep_k = app.add_subcommand("sweep-k", "Recompute entropies at several k");
  sweep_k->add_option("--traces", traces_path)->required();
  sweep_k->add_option("--ks", ks, "Comma-separated k values (default 5,10,15,20)")
      ->delimiter(',');
  sweep_k->add_option("--method", method_name)->capture_default_str();
  sweep_k->add_flag("--allow-undersampled", allow_undersampled);
  sweep_k->add_option("--bootstrap", bootstrap_iters)->capture_default_str();
  sweep_k->add_option("--seed", seed)->capture_default_str();
  sweep_k->add_option("--out", report_out);

  // step-progression
  auto* progression = app.add_subcommand(
      "step-progression", "Per-step mean entropy by final correctness");
  progression->add_option("--traces", traces_path)->required();
  progression->add_option("--seed", seed, "Accepted for uniformity; unused");
  progression->add_option("--out", report_out);

  // budget
  std::uint64_t alpha = 0, beta = 0, gamma = 0, delta = 0;
  std::string order_path, plan_out = "plan.csv";
  auto* budget = app.add_subcommand("budget", "Plan a fixed call budget");
  budget->add_option("--alpha", alpha, "Total calls")->required();
  budget->add_option("--beta", beta, "Tokens per call")->required();
  budget->add_option("--gamma", gamma, "Questions")->required();
  budget->add_option("--delta", delta, "Confident questions")->required();
  budget->add_option("--order", order_path,
                     "CSV of question_id,entropy; the delta lowest are confident");
  budget->add_option("--out", plan_out, "Plan file to write")->capture_default_str();
  budget->add_option("--seed", seed, "Accepted for uniformity; unused");

  // synth
  std::string spec_path, synth_out = "-";
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic trace set");
  synth->add_option("--spec", spec_path, "JSON generator spec")->required();
  synth->add_option("--seed", synth_seed, "Overrides the generator file's seed");
  synth->add_option("--out", synth_out, "Trace file (default stdout)");

  // run
  EndpointFlags endpoint_flags;
  std::string questions_path, traces_out = "traces.jsonl";
  bool gate_on = false;
  std::optional<double> gate_tau;
  std::size_t k_limit = 0;
  auto* run = app.add_subcommand("run", "Run questions against a live endpoint");
  run->add_option("--questions", questions_path, "Question JSONL")->required();
  endpoint_flags.Register(run);
  run->add_flag("--gate", gate_on, "Stop after step 1 when entropy <= tau");
  run->add_option("--tau", gate_tau, "Gate threshold in bits");
  run->add_option("--calibration", calibration_in, "Take tau from this file");
  run->add_option("--k-limit", k_limit, "Alternatives used for gating entropy");
  run->add_option("--out", traces_out)->capture_default_str();

  // run-budget
  std::string plan_in, policy_name = "sequential";
  auto* run_budget = app.add_subcommand("run-budget", "Execute a budget plan live");
  run_budget->add_option("--questions", questions_path)->required();
  run_budget->add_option("--plan", plan_in)->required();
  run_budget->add_option("--policy", policy_name,
                         "sequential or self-consistency")->capture_default_str();
  endpoint_flags.Register(run_budget);
  run_budget->add_option("--out", traces_out)->capture_default_str();

  // serve
  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the gating proxy");
  serve->add_option("--config", config_path, "Gateway JSON config")->required();

  std::vector<const char*> argv = {"entgate"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // --help is a successful parse; everything else is a usage error.
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  ReplayOptions replay_opts;
  replay_opts.bootstrap.iterations = bootstrap_iters;
  replay_opts.bootstrap.seed = seed;
  replay_opts.bootstrap.workers = workers;
  replay_opts.calibrate.allow_undersampled = allow_undersampled;

  try {
    if (calibrate->parsed()) {
      std::vector<LabeledEntropy> samples;
      if (!traces_path.empty()) {
        const TraceSet traces = LoadTraces(std::filesystem::path(traces_path));
        samples = Step1Samples(traces, ResolveK(traces, k));
      } else {
        samples = LoadSamplesCsv(samples_path);
      }
      const ThresholdDecision d = Calibrate(samples, RequireMethod(method_name),
                                            replay_opts.calibrate);
      PrintDecision(out, d);
      WriteCalibrationFile(cal_out, {d, UtcTimestamp()});
      out << "wrote " << cal_out << "\n";
    } else if (replay->parsed()) {
      const TraceSet traces = LoadTraces(std::filesystem::path(traces_path));
      const std::size_t kk = ResolveK(traces, k);
      ThresholdDecision d;
      if (!calibration_in.empty()) {
        d = ReadCalibrationFile(calibration_in).decision;
      } else {
        d = Calibrate(Step1Samples(traces, kk), RequireMethod(method_name),
                      replay_opts.calibrate);
      }
      const ReplayReport r = Evaluate(traces, d, kk, replay_opts);
      WithOutput(report_out, out, [&](std::ostream& o) { WriteReportCsv(o, {&r, 1}); });
    } else if (sweep_methods->parsed()) {
      const TraceSet traces = LoadTraces(std::filesystem::path(traces_path));
      const auto rows =
          MethodSweep(traces, kAllThresholdMethods, ResolveK(traces, k), replay_opts);
      std::vector<ReplayReport> reports;
      for (const auto& row : rows) reports.push_back(row.report);
      WithOutput(report_out, out, [&](std::ostream& o) { WriteReportCsv(o, reports); });
    } else if (sweep_k->parsed()) {
      const TraceSet traces = LoadTraces(std::filesystem::path(traces_path));
      if (ks.empty()) {
        for (std::size_t v : {5, 10, 15, 20}) {
          if (v <= traces.k_logprobs) ks.push_back(v);
        }
        if (ks.empty()) ks.push_back(traces.k_logprobs);
      }
      const auto rows = KSweep(traces, ks, RequireMethod(method_name), replay_opts);
      WithOutput(report_out, out, [&](std::ostream& o) { WriteKSweepCsv(o, rows); });
    } else if (progression->parsed()) {
      const TraceSet traces = LoadTraces(std::filesystem::path(traces_path));
      const auto rows = StepProgression(traces);
      WithOutput(report_out, out,
                 [&](std::ostream& o) { WriteStepProgressionCsv(o, rows); });
    } else if (budget->parsed()) {
      std::vector<std::string> uncertain, confident;
      if (!order_path.empty()) {
        auto order = LoadOrderCsv(order_path);
        if (order.size() != gamma) {
          throw Error(ErrorCode::kInvalidPartition,
                      "order file lists " + std::to_string(order.size()) +
                          " questions but gamma=" + std::to_string(gamma));
        }
        std::stable_sort(order.begin(), order.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        const std::size_t cut = delta > gamma ? 0 : order.size() - delta;
        for (std::size_t i = 0; i < order.size(); ++i) {
          (i < cut ? uncertain : confident).push_back(order[i].first);
        }
      } else {
        char id[32];
        for (std::uint64_t i = 0; i < gamma; ++i) {
          std::snprintf(id, sizeof id, "q%04llu", static_cast<unsigned long long>(i + 1));
          (i + delta < gamma ? uncertain : confident).push_back(id);
        }
      }
      const BudgetPlan plan = PlanBudget(alpha, beta, gamma, delta, uncertain, confident);
      out << "enhanced allocation " << plan.EnhancedAllocation() << "\n";
      out << FormatConservationReport(VerifyConservation(plan));
      WritePlanFile(plan_out, plan);
      out << "wrote " << plan_out << "\n";
    } else if (synth->parsed()) {
      std::ifstream in(spec_path);
      if (!in) throw Error(ErrorCode::kIoError, "cannot read " + spec_path);
      SynthSpec spec = ParseSynthSpec(in);
      if (synth_seed) spec.seed = *synth_seed;
      const TraceSet traces = SynthesizeTraces(spec);
      WithOutput(synth_out, out, [&](std::ostream& o) { SaveTraces(o, traces); });
    } else if (run->parsed()) {
      const EndpointConfig endpoint = endpoint_flags.Build();
      std::optional<LiveGateConfig> gate;
      if (gate_on) {
        LiveGateConfig g;
        g.k_limit = k_limit == 0 ? endpoint.top_logprobs : k_limit;
        if (gate_tau) {
          g.tau = *gate_tau;
        } else if (!calibration_in.empty()) {
          g.tau = ReadCalibrationFile(calibration_in).decision.tau;
        } else {
          throw Error(ErrorCode::kInvalidArgument, "--gate needs --tau or --calibration");
        }
        g.Validate(endpoint);
        gate = g;
      }
      const auto questions = LoadQuestions(questions_path);
      auto transport = std::make_shared<HttpTransport>(endpoint.base_url,
                                                       endpoint.request_timeout);
      ChatClient client(endpoint, transport);
      TraceWriter writer(traces_out, endpoint.model, endpoint.top_logprobs,
                         endpoint.temperature);
      const auto traces =
          RunQuestions(questions, client, gate, endpoint_flags.concurrency, &writer);
      std::size_t gated = 0, steps = 0, final_right = 0;
      for (const auto& t : traces) {
        gated += gate && t.steps.size() == 1 && endpoint.max_steps > 1;
        steps += t.steps.size();
        final_right += t.FinalCorrect();
      }
      out << "questions " << traces.size() << "\n"
          << "steps " << steps << "\n"
          << "gated " << gated << "\n"
          << "calls " << client.calls() << "\n"
          << "http_requests " << client.http_requests() << "\n"
          << "final_acc "
          << Fmt(traces.empty() ? 0.0 : double(final_right) / double(traces.size()))
          << "\n"
          << "wrote " << traces_out << "\n";
    } else if (run_budget->parsed()) {
      BudgetPolicy policy;
      if (policy_name == "sequential" || policy_name == "sequential_refine") {
        policy = BudgetPolicy::kSequentialRefine;
      } else if (policy_name == "self-consistency" || policy_name == "self_consistency") {
        policy = BudgetPolicy::kSelfConsistency;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown policy '" + policy_name + "'");
      }
      const EndpointConfig endpoint = endpoint_flags.Build();
      const auto questions = LoadQuestions(questions_path);
      const BudgetPlan plan = ReadPlanFile(plan_in);
      auto transport = std::make_shared<HttpTransport>(endpoint.base_url,
                                                       endpoint.request_timeout);
      ChatClient client(endpoint, transport);
      const BudgetRunResult result =
          RunBudget(questions, plan, policy, client, endpoint_flags.concurrency);
      TraceWriter writer(traces_out, endpoint.model, endpoint.top_logprobs,
                         endpoint.temperature);
      std::size_t right = 0;
      for (const auto& q : result.questions) {
        writer.Append(q.trace);
        right += q.aggregate_correct;
      }
      const double n = result.questions.empty() ? 1.0 : double(result.questions.size());
      out << "plan_calls " << VerifyConservation(plan).total_calls << "\n"
          << "calls_issued " << result.calls_issued << "\n"
          << "aggregate_acc " << Fmt(double(right) / n) << "\n"
          << "wrote " << traces_out << "\n";
    } else if (serve->parsed()) {
      auto logger = spdlog::stderr_color_mt("entgate");
      const GatewayConfig cfg = LoadGatewayConfig(config_path);
      auto transport = std::make_shared<HttpTransport>(cfg.upstream.base_url,
                                                       cfg.upstream.request_timeout);
      Gateway gateway(cfg, transport, [logger](std::string_view level, std::string_view msg) {
        logger->log(spdlog::level::from_str(std::string(level)), msg);
      });
      g_stop_requested = false;
      std::signal(SIGINT, HandleStopSignal);
      std::signal(SIGTERM, HandleStopSignal);
      gateway.Start();
      out << "listening on " << cfg.listen_host << ":" << gateway.port() << std::endl;
      while (!g_stop_requested.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
      }
      gateway.Stop();
      spdlog::drop("entgate");
    }
  } catch (const Error& e) {
    err << "error: code=" << ErrorCodeName(e.code()) << " message=" << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: code=Internal message=" << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace entgate::cli
