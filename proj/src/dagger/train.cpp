#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rd/dagger.hpp"
#include "rd/error.hpp"
#include "rd/rng.hpp"

namespace rd::dagger {

std::vector<std::uint32_t> holdout_episodes(std::uint64_t seed, int iteration, std::size_t n_worlds,
                                            double fraction) {
  std::size_t k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_worlds)));
  k = std::clamp<std::size_t>(k, 1, n_worlds);
  std::vector<std::uint32_t> idx(n_worlds);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(mix_seed(seed, 0x401D0000ULL + static_cast<std::uint64_t>(iteration)));
  for (std::size_t i = n_worlds; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  idx.resize(k);
  for (auto& e : idx) e += static_cast<std::uint32_t>(iteration * n_worlds);
  std::sort(idx.begin(), idx.end());
  return idx;
}

learner::Dataset collect_demonstration(const Runner& runner, std::vector<sim::EpisodeLog>* logs) {
  const auto& worlds = runner.config().worlds;
  auto episodes = runner.run_all(worlds, EpisodeSpec{}, 0);
  learner::Dataset data(runner.layout());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (episodes[i].log.status != sim::Status::ReachedEnd) {
      fail(ErrorCode::ExpertCrashed, "expert failed scenario " + std::to_string(i) + " (" +
                                         sim::status_name(episodes[i].log.status) + ")");
    }
    data.append(episodes[i].rows);
    if (logs) logs->push_back(std::move(episodes[i].log));
  }
  return data;
}

learner::RowSelection TrainResult::train_rows() const {
  learner::RowSelection rows;
  for (std::size_t i = 0; i < aggregate.rows(); ++i) {
    if (!std::binary_search(holdout_episodes.begin(), holdout_episodes.end(), aggregate.meta(i).episode)) {
      rows.push_back(i);
    }
  }
  return rows;
}

learner::RowSelection TrainResult::holdout_rows() const {
  learner::RowSelection rows;
  for (std::size_t i = 0; i < aggregate.rows(); ++i) {
    if (std::binary_search(holdout_episodes.begin(), holdout_episodes.end(), aggregate.meta(i).episode)) {
      rows.push_back(i);
    }
  }
  return rows;
}

namespace {

void add_holdout(TrainResult& r, const std::vector<std::uint32_t>& ids) {
  r.holdout_episodes.insert(r.holdout_episodes.end(), ids.begin(), ids.end());
  std::sort(r.holdout_episodes.begin(), r.holdout_episodes.end());
}

}  // namespace

TrainResult train(const DaggerConfig& cfg, const IterationHook& hook) {
  validate(cfg);
  const Runner runner(cfg);
  const std::size_t n = cfg.worlds.size();

  TrainResult result;
  result.aggregate = collect_demonstration(runner, &result.demonstration);
  add_holdout(result, holdout_episodes(cfg.seed, 0, n, cfg.holdout_fraction));
  if (hook) hook(0, result);

  for (int k = 1; k <= cfg.n_iterations; ++k) {
    IterationReport rep;
    rep.iteration = k;
    const auto train_rows = result.train_rows();
    rep.train_rows = train_rows.size();
    rep.model = learner::fit(result.aggregate, train_rows, cfg.lambda_base);

    EpisodeSpec spec;
    spec.model = &rep.model;
    spec.takeover_enabled = true;
    spec.iteration = static_cast<std::uint16_t>(k);
    auto episodes = runner.run_all(cfg.worlds, spec, static_cast<std::uint32_t>(k * n));
    int intervened = 0;
    for (auto& ep : episodes) {
      result.aggregate.append(ep.rows);
      intervened += ep.log.takeovers > 0;
      rep.takeovers += ep.log.takeovers;
      rep.crashes += ep.log.status == sim::Status::Crashed;
      rep.episodes.push_back(std::move(ep.log));
    }
    add_holdout(result, holdout_episodes(cfg.seed, k, n, cfg.holdout_fraction));
    rep.intervention_rate = static_cast<double>(intervened) / static_cast<double>(n);
    rep.dataset_rows = result.aggregate.rows();
    const auto holdout = result.holdout_rows();
    rep.holdout_rows = holdout.size();
    rep.imitation_loss = learner::imitation_loss(rep.model, result.aggregate, holdout);
    result.reports.push_back(std::move(rep));
    if (hook) hook(k, result);
  }
  return result;
}

std::size_t best_iteration(const std::vector<IterationReport>& reports) {
  if (reports.empty()) fail(ErrorCode::InvalidArgument, "no reports");
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const auto& a = reports[i];
    const auto& b = reports[best];
    if (a.intervention_rate < b.intervention_rate ||
        (a.intervention_rate == b.intervention_rate && a.imitation_loss <= b.imitation_loss)) {
      best = i;
    }
  }
  return best;
}

nlohmann::json report_to_json(const IterationReport& r) {
  return {{"iteration", r.iteration},
          {"intervention_rate", r.intervention_rate},
          {"imitation_loss", r.imitation_loss},
          {"takeovers", r.takeovers},
          {"crashes", r.crashes},
          {"episodes", r.episodes.size()},
          {"dataset_rows", r.dataset_rows},
          {"train_rows", r.train_rows},
          {"holdout_rows", r.holdout_rows}};
}

void write_iteration(const std::filesystem::path& run_dir, int iteration, const TrainResult& partial) {
  const auto dir = run_dir / ("iter" + std::to_string(iteration));
  std::filesystem::create_directories(dir);
  learner::RowSelection own;
  for (std::size_t i = 0; i < partial.aggregate.rows(); ++i) {
    if (partial.aggregate.meta(i).iteration == iteration) own.push_back(i);
  }
  learner::save_dataset(dir / "dataset.bin", partial.aggregate.subset(own));

  const std::vector<sim::EpisodeLog>& logs =
      iteration == 0 ? partial.demonstration : partial.reports[static_cast<std::size_t>(iteration - 1)].episodes;
  std::ofstream ep(dir / "episodes.jsonl");
  if (!ep) fail(ErrorCode::IoError, "cannot write " + (dir / "episodes.jsonl").string());
  for (const auto& log : logs) sim::write_episode_jsonl(ep, log);

  nlohmann::json report;
  if (iteration == 0) {
    report = {{"iteration", 0}, {"demonstration_rows", own.size()}, {"episodes", logs.size()}};
  } else {
    const auto& rep = partial.reports[static_cast<std::size_t>(iteration - 1)];
    learner::save_model(dir / "model.json", rep.model);
    report = report_to_json(rep);
  }
  std::ofstream out(dir / "report.json");
  if (!out) fail(ErrorCode::IoError, "cannot write " + (dir / "report.json").string());
  out << report.dump(2) << '\n';
}

}  // namespace rd::dagger
