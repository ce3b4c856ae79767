#include "volchain/sim/engine.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <tuple>
#include <unordered_map>

#include "volchain/behavior/fuzzify.hpp"
#include "volchain/behavior/status.hpp"
#include "volchain/chain/formation.hpp"
#include "volchain/chain/value_matrix.hpp"
#include "volchain/domain/errors.hpp"
#include "volchain/domain/validation.hpp"
#include "volchain/incentive/gain.hpp"
#include "volchain/incentive/selection.hpp"
#include "volchain/similarity/similarity.hpp"
#include "volchain/sim/models.hpp"

namespace volchain::sim {

ModeSwitches apply_mode(Mode mode) {
  switch (mode) {
    case Mode::incentive_bc1: return {true, true, true, false, false};
    case Mode::incentive_bc2: return {true, false, true, false, false};
    case Mode::non_incentive_bc: return {false, false, false, false, true};
    case Mode::non_bc: return {false, false, false, true, false};
  }
  return {};
}

std::string LogRecord::to_line() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "time=%.17g seq=%" PRIu64 " kind=", time, seq);
  std::string line = buf + kind;
  if (kind == "energy") {
    std::snprintf(buf, sizeof buf, " joules=%.17g", joules);
    line += " device=" + device + " energy_kind=" + energy_kind + buf;
  } else {
    std::snprintf(buf, sizeof buf, " cause_seq=%" PRIu64 " cause_time=%.17g", cause_seq, cause_time);
    line += buf;
  }
  return line;
}

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

enum class Ev { promotion, arrival, plan_done, dispatch, link_done, transfer_done, job_finish, job_drop, deadline, mobility };

std::string_view ev_name(Ev e) {
  switch (e) {
    case Ev::promotion: return "promotion";
    case Ev::arrival: return "arrival";
    case Ev::plan_done: return "plan-done";
    case Ev::dispatch: return "dispatch";
    case Ev::link_done: return "link-done";
    case Ev::transfer_done: return "transfer-done";
    case Ev::job_finish: return "job-finish";
    case Ev::job_drop: return "job-drop";
    case Ev::deadline: return "deadline";
    case Ev::mobility: return "mobility";
  }
  return "?";
}

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  Ev kind = Ev::arrival;
  std::size_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t cause_seq = 0;
  double cause_time = 0.0;
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    return x.seq > y.seq;
  }
};

// Independent generator per concern, so adding draws in one place does not
// shift the others.
enum Stream : std::uint32_t { population = 1, requests = 2, mobility = 3, noise = 4, decisions = 5, exploration = 6 };

std::mt19937_64 make_stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

enum class JobState { waiting, transferring, queued, running, done, cancelled };

struct Job {
  std::size_t req = 0;
  std::size_t pos = 0;
  std::size_t device = 0;
  std::size_t source = kNone;  // where the input came from
  double cycles = 0.0;
  double assign_time = 0.0;
  double ready_time = 0.0;
  double start_time = 0.0;
  double run_s = 0.0;
  double energy_j = 0.0;
  double quality = 0.0;
  std::size_t link = kNone;
  double hops = 0.0;
  JobState state = JobState::waiting;
};

// Fluid fair-share model of one access point's medium.
struct Link {
  std::map<std::size_t, double> remaining_bits;  // by job
  double last_update = 0.0;
  std::uint64_t version = 0;
};

struct Device {
  bool fog = false;
  HardwareProfile hw;
  std::size_t ap = 0;
  std::set<std::tuple<double, std::size_t, std::size_t, std::size_t>> ready;  // (arrival, request, position, job)
  std::size_t running = kNone;
  double committed_cycles = 0.0;  // accepted and not yet finished
  DeviceUsage usage;
  std::vector<std::pair<double, double>> engaged;
};

enum class Phase { waiting, planning, running, complete, failed };

struct Req {
  ServiceRequest r;
  std::size_t requester = 0;
  std::size_t fog = 0;  // device index of the serving fog
  double deadline = 0.0;
  Phase phase = Phase::waiting;
  std::string kind = "simple";
  std::vector<std::size_t> task_at;              // position -> task index
  std::vector<std::vector<std::size_t>> children;  // position -> dependent positions
  std::vector<std::size_t> deps_left;
  std::vector<chain::Position> positions;
  std::vector<std::size_t> picks;
  std::vector<std::size_t> job_of;
  std::vector<bool> done;
  std::vector<ActualOutcome> outcomes;
  std::vector<double> finished_at;
  std::vector<std::size_t> attempts;
  std::vector<std::set<ParticipantId>> excluded;
  bool has_chain = false;
  chain::Chain chain;
  std::size_t appended = 0;
  std::map<ParticipantId, std::vector<double>> scores;
  std::size_t mined = 0;
  Credits reward;
  double completion = 0.0;
  std::string failure;

  bool terminal() const { return phase == Phase::complete || phase == Phase::failed; }
  const Task& task(std::size_t pos) const { return r.tasks[task_at[pos]]; }
};

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

class Engine {
 public:
  explicit Engine(const ScenarioConfig& cfg)
      : cfg_(cfg),
        sw_(apply_mode(cfg.run.mode)),
        rng_pop_(make_stream(cfg.run.seed, population)),
        rng_req_(make_stream(cfg.run.seed, requests)),
        rng_mob_(make_stream(cfg.run.seed, mobility)),
        rng_noise_(make_stream(cfg.run.seed, noise)),
        rng_dec_(make_stream(cfg.run.seed, decisions)),
        rng_explore_(make_stream(cfg.run.seed, exploration)),
        matrix_(cfg.reward.rho),
        trust_(cfg.behavior.trust_initial) {
    quality_ = {cfg.quality.base, cfg.quality.span};
    noise_ = {cfg.noise.time_sigma, cfg.noise.energy_sigma, cfg.noise.quality_sigma};
    participation_ = {cfg.participation.gain_window, cfg.participation.gain_floor, cfg.participation.loss_tolerance};
    policy_.preference_threshold = cfg.selection.preference_threshold;
    policy_.c1_band = cfg.selection.c1_band;
    status_.max_declines = cfg.behavior.max_declines;
    status_.invitation_window = cfg.behavior.invitation_window;
    status_.greedy_min_sample = cfg.behavior.greedy_min_sample;
    status_.greedy_quantile = cfg.behavior.greedy_quantile;
    area_ = {cfg.area.width, cfg.area.height, cfg.population.speed_min, cfg.population.speed_max};
    ref_cpu_ = 0.5 * (cfg.hardware.ue_cpu_min + cfg.hardware.ue_cpu_max);
    build_network();
    build_population();
    build_requests();
  }

  RunOutput run();

 private:
  // --- setup -------------------------------------------------------------
  void build_network();
  void build_population();
  void build_requests();
  std::size_t nearest_ap(const Position& p) const;

  // --- event plumbing ----------------------------------------------------
  void schedule(double time, Ev kind, std::size_t a, std::uint64_t b = 0);
  void charge(std::size_t dev, const char* kind, double joules);
  bool work_pending() const { return open_requests_ > 0 || arrivals_left_ > 0; }

  // --- handlers ----------------------------------------------------------
  void on_arrival(std::size_t q);
  void on_plan_done(std::size_t q);
  void on_dispatch(std::size_t q);
  void on_link_done(std::size_t ap, std::uint64_t version);
  void on_transfer_done(std::size_t job);
  void on_job_end(std::size_t job, bool dropped);
  void on_mobility();
  void on_promotion();

  // --- planning ----------------------------------------------------------
  void plan_incentive(Req& q, std::size_t qi);
  void plan_random(Req& q, std::size_t qi);
  void plan_fog(Req& q, std::size_t qi);
  std::vector<chain::CandidateOption> invite_registered(Req& q, std::size_t pos,
                                                        const std::map<std::size_t, double>& tentative);
  std::vector<chain::CandidateOption> invite_via_miners(Req& q, std::size_t pos,
                                                        const std::map<std::size_t, double>& tentative);
  double predicted_gain(std::size_t dev, const Task& t, const Req& q, const std::map<std::size_t, double>& tentative,
                        double* reward) const;
  bool invite(std::size_t dev, const Req& q, const Task& t, double gain, double reward, bool last_resort);
  chain::CandidateOption option_for(std::size_t dev, const Task& t, const Req& q, double gain) const;
  void assign(std::size_t qi, std::size_t pos, std::size_t dev);

  // --- execution ---------------------------------------------------------
  double hops(std::size_t src, std::size_t dst) const;
  void make_ready(std::size_t job, std::size_t source);
  void link_advance(std::size_t ap);
  void link_reschedule(std::size_t ap);
  void enqueue(std::size_t job);
  void try_start(std::size_t dev);
  void release(std::size_t job, JobState final_state);
  void append_ready_blocks(std::size_t qi);
  void complete(std::size_t qi);
  void fail(std::size_t qi, std::string reason);
  void reassign(std::size_t qi, std::size_t pos, std::size_t source);

  // --- behaviour ---------------------------------------------------------
  void refresh(Participant& p);
  void record_rank(const behavior::RankEvent& e, const behavior::CompositionMembers& members);
  std::size_t device_of(const ParticipantId& id) const { return index_.at(id); }

  void finish_metrics();

  const ScenarioConfig& cfg_;
  ModeSwitches sw_;
  std::mt19937_64 rng_pop_, rng_req_, rng_mob_, rng_noise_, rng_dec_, rng_explore_;
  QualityModel quality_;
  NoiseModel noise_;
  ParticipationPolicy participation_;
  incentive::SelectionPolicy policy_;
  behavior::StatusPolicy status_;
  MobilityArea area_;
  double ref_cpu_ = 1e9;

  std::vector<Position> aps_;
  std::vector<Link> links_;
  std::vector<Participant> pool_;
  std::vector<Mover> movers_;
  std::vector<Device> devices_;
  std::unordered_map<ParticipantId, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> holders_;  // capability -> devices

  std::deque<Req> reqs_;
  std::vector<Job> jobs_;
  std::vector<double> mgmt_free_;

  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t next_seq_ = 1;
  double now_ = 0.0;
  Event current_{};
  std::size_t open_requests_ = 0;
  std::size_t arrivals_left_ = 0;

  chain::ValueMatrix matrix_;
  chain::RewardBook book_;
  double trust_;
  double rewards_ue_ = 0.0;
  double rewards_miner_ = 0.0;

  RunOutput out_;
};

// ---------------------------------------------------------------------------
// setup

void Engine::build_network() {
  const std::size_t n = cfg_.network.ap_count;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) * cfg_.area.width /
                                                                 cfg_.area.height)));
  const std::size_t rows = (n + cols - 1) / cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = (static_cast<double>(i % cols) + 0.5) * cfg_.area.width / static_cast<double>(cols);
    const double cy = (static_cast<double>(i / cols) + 0.5) * cfg_.area.height / static_cast<double>(rows);
    aps_.push_back({cx, cy});
  }
  links_.resize(n);
  mgmt_free_.assign(n, 0.0);
}

std::size_t Engine::nearest_ap(const Position& p) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < aps_.size(); ++i) {
    if (distance(p, aps_[i]) < distance(p, aps_[best])) best = i;
  }
  return best;
}

void Engine::build_population() {
  const auto& pc = cfg_.population;
  const auto& hc = cfg_.hardware;
  const std::size_t common = pc.capability_count - pc.rare_capability_count;
  std::uniform_real_distribution<double> cpu(hc.ue_cpu_min, hc.ue_cpu_max);
  std::uniform_real_distribution<double> epc(hc.ue_epc_min, hc.ue_epc_max);
  std::uniform_real_distribution<double> speed(pc.speed_min, pc.speed_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<std::size_t> disposition(cfg_.dispositions.share.begin(),
                                                      cfg_.dispositions.share.end());
  std::vector<std::size_t> cap_idx(common);
  std::vector<std::size_t> char_idx(pc.characteristic_count);

  for (std::size_t i = 0; i < pc.ue_count; ++i) {
    Participant p;
    p.id = ParticipantId(padded("ue", i, 4));
    p.hardware.cpu_rate = cpu(rng_pop_);
    p.hardware.energy_per_cycle = epc(rng_pop_);
    p.hardware.storage = hc.ue_storage;
    p.hardware.tx_power = hc.ue_tx_power;
    p.hardware.idle_power = hc.ue_idle_power;
    p.disposition = static_cast<CoopCategory>(disposition(rng_pop_));
    p.registered = unit(rng_pop_) < pc.registered_fraction;

    std::iota(cap_idx.begin(), cap_idx.end(), std::size_t{0});
    std::shuffle(cap_idx.begin(), cap_idx.end(), rng_pop_);
    std::vector<std::string> caps;
    for (std::size_t k = 0; k < pc.caps_per_ue; ++k) caps.push_back(padded("cap", cap_idx[k], 2));
    const bool rare = !p.registered && pc.rare_capability_count > 0 && unit(rng_pop_) < pc.rare_holder_fraction;
    if (rare) {
      const auto r = std::uniform_int_distribution<std::size_t>(0, pc.rare_capability_count - 1)(rng_pop_);
      caps.push_back(padded("cap", common + r, 2));
    }
    p.capabilities = FeatureSet::canonicalize(caps);

    std::iota(char_idx.begin(), char_idx.end(), std::size_t{0});
    std::shuffle(char_idx.begin(), char_idx.end(), rng_pop_);
    std::vector<std::string> prefs;
    for (std::size_t k = 0; k < pc.prefs_per_ue; ++k) prefs.push_back(padded("ch", char_idx[k], 2));
    p.preferences = FeatureSet::canonicalize(prefs);

    Mover m;
    m.position = random_point(area_, rng_pop_);
    m.waypoint = random_point(area_, rng_pop_);
    m.speed = speed(rng_pop_);
    p.position = m.position;

    Device d;
    d.hw = p.hardware;
    d.ap = nearest_ap(p.position);
    d.usage.id = p.id.str();
    for (const auto& c : p.capabilities) holders_[c].push_back(i);
    index_.emplace(p.id, i);
    pool_.push_back(std::move(p));
    movers_.push_back(m);
    devices_.push_back(std::move(d));
  }

  for (std::size_t f = 0; f < aps_.size(); ++f) {
    Device d;
    d.fog = true;
    d.hw.cpu_rate = hc.fog_cpu_factor * ref_cpu_;
    d.hw.energy_per_cycle = hc.fog_epc;
    d.hw.tx_power = hc.fog_tx_power;
    d.hw.idle_power = hc.fog_idle_power;
    d.ap = f;
    d.usage.id = padded("fog", f, 2);
    d.usage.fog = true;
    devices_.push_back(std::move(d));
  }

  // Reputation carried over from before the run: the local fog has rated
  // every device a few times according to how it actually behaves.
  std::normal_distribution<double> jitter(0.0, cfg_.behavior.warmup_noise);
  for (auto& p : pool_) {
    const auto fog = devices_[pool_.size() + devices_[device_of(p.id)].ap].usage.id;
    const behavior::CompositionMembers members{{p.id}, fog};
    const double centre = cfg_.dispositions.warmup_score[static_cast<std::size_t>(p.disposition)];
    for (std::size_t k = 0; k < cfg_.behavior.warmup_ratings; ++k) {
      const double s = std::clamp(centre + (cfg_.behavior.warmup_noise > 0.0 ? jitter(rng_pop_) : 0.0), 0.0, 1.0);
      out_.ranks.record({behavior::RaterKind::fog, fog, p.id, TaskId("warmup"), s, 0.0}, members);
    }
    refresh(p);
  }
}

void Engine::build_requests() {
  const auto& rc = cfg_.requests;
  const auto& pc = cfg_.population;
  const std::size_t common = pc.capability_count - pc.rare_capability_count;
  const std::size_t count = rc.arrival == ArrivalKind::batch ? rc.batch_size : rc.poisson_count;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> size(rc.size_min, rc.size_max);
  std::uniform_real_distribution<double> intensity(rc.intensity_min, rc.intensity_max);
  std::uniform_real_distribution<double> floor(rc.qos_floor_min, rc.qos_floor_max);
  std::exponential_distribution<double> gap(rc.poisson_rate);
  std::vector<std::size_t> char_idx(pc.characteristic_count);

  double t = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (rc.arrival == ArrivalKind::poisson) t += gap(rng_req_);
    Req q;
    auto& r = q.r;
    r.id = RequestId(padded("r", i, 4));
    q.requester = std::uniform_int_distribution<std::size_t>(0, pool_.size() - 1)(rng_req_);
    r.requester = pool_[q.requester].id;
    r.arrival_time = t;
    r.qos_q = {floor(rng_req_), 1.0};
    r.other_o.cost_cap = 0.0;
    const auto n = std::uniform_int_distribution<std::size_t>(rc.tasks_min, rc.tasks_max)(rng_req_);
    const bool needs_rare = pc.rare_capability_count > 0 && unit(rng_req_) < rc.rare_fraction;
    const std::size_t rare_task = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_req_);
    FeatureSet description;
    for (std::size_t k = 0; k < n; ++k) {
      Task task;
      task.id = TaskId(padded("t", k, 2));
      task.size_alpha = size(rng_req_);
      task.intensity_delta = intensity(rng_req_);
      task.energy_zeta = task.intensity_delta * 1e-9;
      const double cycles = task.size_alpha * task.intensity_delta;
      task.deadline_gamma = rc.deadline_factor * cycles / ref_cpu_ + 3.0 * cfg_.network.hop_latency_s +
                            task.size_alpha * cfg_.network.block_bits / cfg_.network.bandwidth_bps;
      std::size_t cap = std::uniform_int_distribution<std::size_t>(0, common - 1)(rng_req_);
      if (needs_rare && k == rare_task) {
        cap = common + std::uniform_int_distribution<std::size_t>(0, pc.rare_capability_count - 1)(rng_req_);
      }
      task.required_capability = FeatureSet::canonicalize(std::vector<std::string>{padded("cap", cap, 2)});
      std::iota(char_idx.begin(), char_idx.end(), std::size_t{0});
      std::shuffle(char_idx.begin(), char_idx.end(), rng_req_);
      std::vector<std::string> chars;
      for (std::size_t c = 0; c < rc.chars_per_task; ++c) chars.push_back(padded("ch", char_idx[c], 2));
      task.characteristics = FeatureSet::canonicalize(chars);
      if (k > 0 && unit(rng_req_) < rc.dependency_prob) task.deps_beta.push_back(TaskId(padded("t", k - 1, 2)));
      if (k > 1 && unit(rng_req_) < 0.5 * rc.dependency_prob) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng_req_);
        task.deps_beta.push_back(TaskId(padded("t", j, 2)));
      }
      task.sensitive = unit(rng_req_) < rc.sensitive_fraction;
      description = description.united(task.characteristics).united(task.required_capability);
      r.tasks.push_back(std::move(task));
    }
    r.description_d = description;
    reqs_.push_back(std::move(q));
  }
}

// ---------------------------------------------------------------------------
// event plumbing

void Engine::schedule(double time, Ev kind, std::size_t a, std::uint64_t b) {
  Event e;
  e.time = std::max(time, now_);
  e.seq = next_seq_++;
  e.kind = kind;
  e.a = a;
  e.b = b;
  e.cause_seq = current_.seq;
  e.cause_time = current_.time;
  queue_.push(e);
}

void Engine::charge(std::size_t dev, const char* kind, double joules) {
  if (joules == 0.0) return;
  auto& u = devices_[dev].usage;
  if (kind[0] == 'c') {
    u.compute_j += joules;
  } else if (kind[0] == 'r') {
    u.radio_j += joules;
  } else {
    u.idle_j += joules;
  }
  if (cfg_.run.event_log) {
    LogRecord rec;
    rec.time = now_;
    rec.seq = current_.seq;
    rec.kind = "energy";
    rec.device = u.id;
    rec.energy_kind = kind;
    rec.joules = joules;
    out_.log.push_back(std::move(rec));
  }
}

RunOutput Engine::run() {
  if (sw_.miners) schedule(0.0, Ev::promotion, 0);
  for (std::size_t i = 0; i < reqs_.size(); ++i) schedule(reqs_[i].r.arrival_time, Ev::arrival, i);
  arrivals_left_ = reqs_.size();
  schedule(cfg_.population.mobility_tick_s, Ev::mobility, 0);

  while (!queue_.empty()) {
    const Event e = queue_.top();
    if (e.time > cfg_.run.duration) break;
    queue_.pop();
    now_ = e.time;
    current_ = e;
    if (cfg_.run.event_log) {
      LogRecord rec;
      rec.time = e.time;
      rec.seq = e.seq;
      rec.kind = std::string(ev_name(e.kind));
      rec.cause_seq = e.cause_seq;
      rec.cause_time = e.cause_time;
      out_.log.push_back(std::move(rec));
    }
    switch (e.kind) {
      case Ev::promotion: on_promotion(); break;
      case Ev::arrival: on_arrival(e.a); break;
      case Ev::plan_done: on_plan_done(e.a); break;
      case Ev::dispatch: on_dispatch(e.a); break;
      case Ev::link_done: on_link_done(e.a, e.b); break;
      case Ev::transfer_done: on_transfer_done(e.a); break;
      case Ev::job_finish: on_job_end(e.a, false); break;
      case Ev::job_drop: on_job_end(e.a, true); break;
      case Ev::deadline:
        if (!reqs_[e.a].terminal() && reqs_[e.a].phase != Phase::waiting) fail(e.a, "deadline missed");
        break;
      case Ev::mobility: on_mobility(); break;
    }
  }
  if (work_pending()) {
    now_ = std::min(std::max(now_, 0.0), cfg_.run.duration);
    current_ = Event{now_, next_seq_++, Ev::deadline, 0, 0, 0, now_};
    for (std::size_t i = 0; i < reqs_.size(); ++i) {
      if (!reqs_[i].terminal()) {
        if (reqs_[i].phase == Phase::waiting) {
          reqs_[i].phase = Phase::failed;
          reqs_[i].failure = "run ended";
        } else {
          fail(i, "run ended");
        }
      }
    }
  }
  out_.end_time = now_;
  finish_metrics();
  return std::move(out_);
}

// ---------------------------------------------------------------------------
// arrivals and planning

void Engine::on_arrival(std::size_t qi) {
  auto& q = reqs_[qi];
  --arrivals_left_;
  ++open_requests_;
  q.phase = Phase::planning;
  const std::size_t ap = devices_[q.requester].ap;
  q.fog = pool_.size() + ap;

  const auto order = topological_order(q.r);
  const std::size_t n = order.size();
  q.task_at = order;
  std::map<TaskId, std::size_t> pos_of;
  for (std::size_t k = 0; k < n; ++k) pos_of[q.r.tasks[order[k]].id] = k;
  q.children.assign(n, {});
  q.deps_left.assign(n, 0);
  std::vector<double> path(n, 0.0);
  double critical = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& t = q.task(k);
    double before = 0.0;
    for (const auto& d : t.deps_beta) {
      const auto j = pos_of.at(d);
      q.children[j].push_back(k);
      ++q.deps_left[k];
      before = std::max(before, path[j]);
    }
    path[k] = before + t.deadline_gamma;
    critical = std::max(critical, path[k]);
  }
  q.deadline = now_ + cfg_.requests.planning_allowance_s + critical;
  q.positions.resize(n);
  for (std::size_t k = 0; k < n; ++k) q.positions[k] = {&q.task(k), chain::slot_key(q.task(k)), {}};
  q.picks.assign(n, 0);
  q.job_of.assign(n, kNone);
  q.done.assign(n, false);
  q.outcomes.assign(n, {});
  q.finished_at.assign(n, 0.0);
  q.attempts.assign(n, 0);
  q.excluded.assign(n, {});
  schedule(q.deadline, Ev::deadline, qi);

  // The fog's management queue: planning cost grows with the number of
  // candidates it has to evaluate.
  std::size_t evaluated = 0;
  if (!sw_.fog_executes) {
    for (const auto& t : q.r.tasks) {
      for (const auto& c : t.required_capability) {
        if (const auto it = holders_.find(c); it != holders_.end()) evaluated += it->second.size();
      }
    }
  }
  const double service =
      cfg_.hardware.plan_base_s + cfg_.hardware.plan_per_candidate_s * static_cast<double>(evaluated);
  const double start = std::max(now_, mgmt_free_[ap]);
  mgmt_free_[ap] = start + service;
  charge(q.fog, "compute", devices_[q.fog].hw.cpu_rate * service * devices_[q.fog].hw.energy_per_cycle);
  schedule(start + service, Ev::plan_done, qi);
}

void Engine::on_plan_done(std::size_t qi) {
  auto& q = reqs_[qi];
  if (q.terminal()) return;
  if (!validate_request(q.r).valid()) {
    fail(qi, "invalid request");
    return;
  }
  if (sw_.fog_executes) {
    plan_fog(q, qi);
    return;
  }
  q.has_chain = true;
  q.chain = chain::start_chain(q.r, ParticipantId(devices_[q.fog].usage.id), now_);
  if (sw_.incentives) {
    plan_incentive(q, qi);
  } else {
    plan_random(q, qi);
  }
}

double Engine::hops(std::size_t src, std::size_t dst) const {
  if (src == dst) return 0.0;
  const auto& a = devices_[src];
  const auto& b = devices_[dst];
  if (a.fog && b.fog) return 1.0;
  if (a.fog || b.fog) return a.ap == b.ap ? 1.0 : 2.0;
  return a.ap == b.ap ? 2.0 : 3.0;
}

double Engine::predicted_gain(std::size_t dev, const Task& t, const Req& q,
                              const std::map<std::size_t, double>& tentative, double* reward) const {
  const auto& p = pool_[dev];
  NetState net;
  net.hops = std::max(1.0, hops(q.requester, dev));
  net.hop_latency_s = cfg_.network.hop_latency_s;
  net.bandwidth_bps = cfg_.network.bandwidth_bps;
  net.block_bits = cfg_.network.block_bits;
  net.concurrent_transfers = links_[devices_[dev].ap].remaining_bits.size();
  double committed = devices_[dev].committed_cycles;
  if (const auto it = tentative.find(dev); it != tentative.end()) committed += it->second;
  net.backlog_s = committed / p.hardware.cpu_rate;
  const auto pr = predict_outcome(p, t, net, quality_, cfg_.reward);
  const auto g = incentive::compute_gain(incentive::TaskExecution{t.deadline_gamma, q.r.qos_q, pr.outcome},
                                         cfg_.reward);
  if (reward != nullptr) *reward = g.reward_r;
  return g.gain_g;
}

bool Engine::invite(std::size_t dev, const Req& q, const Task& t, double gain, double reward, bool last_resort) {
  auto& p = pool_[dev];
  const double airtime = cfg_.network.message_bits / cfg_.network.bandwidth_bps;
  charge(q.fog, "radio", devices_[q.fog].hw.tx_power * airtime);
  charge(dev, "radio", p.hardware.tx_power * airtime);
  Invitation inv;
  inv.predicted_gain = gain;
  inv.preference_match =
      similarity::task_preference_match(p, t, cfg_.reward, cfg_.participation.preference_threshold);
  inv.last_resort = last_resort;
  const bool accepted = participation_decision(p, inv, participation_);
  // Turning down work that would lose money is not held against a device.
  if (accepted || gain > 0.0) {
    behavior::note_invitation(p, reward, accepted, status_);
    refresh(p);
  }
  return accepted;
}

chain::CandidateOption Engine::option_for(std::size_t dev, const Task& t, const Req& q, double gain) const {
  chain::CandidateOption o;
  o.participant = pool_[dev].id;
  o.input = chain::block_input(t, pool_[dev], q.r.description_d);
  o.output = chain::block_output(t, o.input);
  o.anticipated_gain = gain;
  return o;
}

std::vector<chain::CandidateOption> Engine::invite_registered(Req& q, std::size_t pos,
                                                              const std::map<std::size_t, double>& tentative) {
  const auto& t = q.task(pos);
  std::vector<std::size_t> eligible;
  for (const auto* p : incentive::eligible_candidates(t, pool_, cfg_.reward, policy_)) {
    if (p->registered) eligible.push_back(device_of(p->id));
  }
  if (eligible.empty()) return {};
  double best_c = 0.0;
  for (const auto d : eligible) best_c = std::max(best_c, pool_[d].coop_score_c);
  std::sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) { return pool_[a].id < pool_[b].id; });

  std::vector<std::pair<double, std::size_t>> willing;
  for (const bool last_resort : {false, true}) {
    for (const auto d : eligible) {
      const bool qualified = pool_[d].coop_score_c >= best_c - policy_.c1_band;
      if (qualified == last_resort) continue;
      if (q.excluded[pos].count(pool_[d].id) > 0) continue;
      double reward = 0.0;
      const double gain = predicted_gain(d, t, q, tentative, &reward);
      if (invite(d, q, t, gain, reward, last_resort)) willing.emplace_back(gain, d);
    }
    if (!willing.empty()) break;
  }
  std::sort(willing.begin(), willing.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return pool_[a.second].id < pool_[b.second].id;
  });
  if (willing.size() > cfg_.selection.alternatives) willing.resize(cfg_.selection.alternatives);
  std::vector<chain::CandidateOption> options;
  for (const auto& [gain, d] : willing) options.push_back(option_for(d, t, q, gain));
  return options;
}

std::vector<chain::CandidateOption> Engine::invite_via_miners(Req& q, std::size_t pos,
                                                              const std::map<std::size_t, double>& tentative) {
  const auto& t = q.task(pos);
  std::map<std::size_t, double> answered;  // device -> gain, or -inf when declined
  const auto gain_of = [&](const Participant& p, const Task& task) {
    const auto d = device_of(p.id);
    if (const auto it = answered.find(d); it != answered.end()) return it->second;
    double gain = -std::numeric_limits<double>::infinity();
    if (q.excluded[pos].count(p.id) == 0 && d != q.requester) {
      double reward = 0.0;
      const double g = predicted_gain(d, task, q, tentative, &reward);
      if (invite(d, q, task, g, reward, false)) gain = g;
    }
    answered.emplace(d, gain);
    return gain;
  };

  const FeatureSet expected_prev =
      pos == 0 ? q.r.description_d : q.task(pos - 1).characteristics.united(q.task(pos - 1).required_capability);
  const auto next_req = chain::next_requirement(q.positions, pos, q.r.description_d);
  chain::MinerSearchParams search;
  search.range_m = cfg_.formation.miner_range_m;
  search.top_k = cfg_.formation.miner_top_k;
  search.weights = {cfg_.formation.weight_block, cfg_.formation.weight_next, cfg_.formation.weight_request};
  search.policy = policy_;
  std::vector<chain::MinerReport> reports;
  for (const auto& m : pool_) {
    if (!m.is_miner || m.status != ParticipantStatus::active) continue;
    auto found = chain::miner_search(m, t, pool_, expected_prev, next_req, q.r.description_d, cfg_.reward, search,
                                     gain_of);
    reports.insert(reports.end(), found.begin(), found.end());
  }
  auto options = chain::merge_reports(reports);
  std::sort(options.begin(), options.end(), [](const auto& a, const auto& b) {
    if (a.anticipated_gain != b.anticipated_gain) return a.anticipated_gain > b.anticipated_gain;
    return a.participant < b.participant;
  });
  if (options.size() > cfg_.selection.alternatives) options.resize(cfg_.selection.alternatives);
  return options;
}

void Engine::plan_incentive(Req& q, std::size_t qi) {
  const std::size_t n = q.positions.size();
  const auto registry = chain::build_registry(pool_);
  std::vector<bool> mined(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    if (registry.covers(q.task(k).required_capability)) continue;
    if (!sw_.miners) {
      fail(qi, "capability '" + q.task(k).required_capability.to_text() + "' is not advertised");
      return;
    }
    mined[k] = true;
  }
  chain::ClassifyParams cp;
  cp.stringent_qos_floor = cfg_.formation.stringent_qos_floor;
  cp.relaxed_deadline_slack = cfg_.formation.relaxed_deadline_slack;
  cp.reference_cpu_rate = ref_cpu_;
  const auto kind = chain::classify_request(q.r, registry, cp);
  q.kind = std::string(chain::to_string(kind));

  std::map<std::size_t, double> tentative;  // cycles promised earlier in this plan
  const FeatureSet* prev = &q.r.description_d;
  for (std::size_t k = 0; k < n; ++k) {
    auto& pos = q.positions[k];
    if (!mined[k]) {
      pos.options = invite_registered(q, k, tentative);
      if (pos.options.empty() && !sw_.miners) {
        fail(qi, "no willing participant for task '" + pos.task->id.str() + "'");
        return;
      }
      // Poor offers from the registry (or none at all): the miners may know
      // an idle device nearby.
      const bool losing =
          pos.options.empty() || pos.options.front().anticipated_gain <= cfg_.formation.escalation_gain;
      if (losing && sw_.miners) {
        auto found = invite_via_miners(q, k, tentative);
        if (!found.empty() &&
            (pos.options.empty() || found.front().anticipated_gain > pos.options.front().anticipated_gain)) {
          pos.options = std::move(found);
          mined[k] = true;
        }
      }
      if (pos.options.empty()) {
        fail(qi, "no miner found a willing participant for task '" + pos.task->id.str() + "' (" + pos.task->required_capability.to_text() + ")");
        return;
      }
    } else {
      pos.options = invite_via_miners(q, k, tentative);
      if (pos.options.empty()) {
        fail(qi, "no miner found a willing participant for task '" + pos.task->id.str() + "' (" + pos.task->required_capability.to_text() + ")");
        return;
      }
    }
    if (mined[k]) {
      // Provisional pick so later positions see this device as loaded.
      q.picks[k] = 0;
      tentative[device_of(pos.options[0].participant)] += pos.task->size_alpha * pos.task->intensity_delta;
      continue;
    }
    const auto pick = chain::choose_by_value(std::span<const chain::Position>(&pos, 1), *prev, matrix_, cfg_.reward,
                                             cfg_.formation.epsilon, &rng_explore_)[0];
    q.picks[k] = pick;
    tentative[device_of(pos.options[pick].participant)] += pos.task->size_alpha * pos.task->intensity_delta;
    prev = &pos.options[pick].output;
  }

  const chain::SimilarityWeights w{cfg_.formation.weight_block, cfg_.formation.weight_next,
                                   cfg_.formation.weight_request};
  const auto mined_count = static_cast<std::size_t>(std::count(mined.begin(), mined.end(), true));
  if (mined_count > 0) {
    q.kind = "complex";
    std::vector<chain::Position> fixed = q.positions;
    for (std::size_t k = 0; k < n; ++k) {
      if (!mined[k]) fixed[k].options = {q.positions[k].options[q.picks[k]]};
    }
    const auto dp = chain::choose_by_similarity(fixed, q.r.description_d, w, cfg_.reward);
    for (std::size_t k = 0; k < n; ++k) {
      if (mined[k]) q.picks[k] = dp[k];
    }
  } else if (kind == chain::SearchKind::complex) {
    q.picks = chain::choose_by_similarity(q.positions, q.r.description_d, w, cfg_.reward);
  }
  q.mined = mined_count;

  for (std::size_t k = 0; k < n; ++k) assign(qi, k, device_of(q.positions[k].options[q.picks[k]].participant));
  const double rtt = 4.0 * cfg_.network.hop_latency_s;
  schedule(now_ + rtt + (mined_count > 0 ? cfg_.formation.miner_search_s : 0.0), Ev::dispatch, qi);
  q.phase = Phase::running;
}

void Engine::plan_random(Req& q, std::size_t qi) {
  const std::size_t n = q.positions.size();
  const auto registry = chain::build_registry(pool_);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    auto& pos = q.positions[k];
    const auto& t = *pos.task;
    if (!registry.covers(t.required_capability)) {
      fail(qi, "capability '" + t.required_capability.to_text() + "' is not advertised");
      return;
    }
    std::set<std::size_t> capable;
    for (const auto& c : t.required_capability) {
      for (const auto d : holders_[c]) {
        if (pool_[d].registered && similarity::capability_match(pool_[d], t)) capable.insert(d);
      }
    }
    const double airtime = cfg_.network.message_bits / cfg_.network.bandwidth_bps;
    for (const auto d : capable) {
      charge(q.fog, "radio", devices_[q.fog].hw.tx_power * airtime);
      charge(d, "radio", pool_[d].hardware.tx_power * airtime);
      if (coin(rng_dec_) < cfg_.participation.join_probability) pos.options.push_back(option_for(d, t, q, 0.0));
    }
    if (pos.options.empty()) {
      fail(qi, "no willing participant for task '" + t.id.str() + "'");
      return;
    }
    q.picks[k] = std::uniform_int_distribution<std::size_t>(0, pos.options.size() - 1)(rng_dec_);
  }
  for (std::size_t k = 0; k < n; ++k) assign(qi, k, device_of(q.positions[k].options[q.picks[k]].participant));
  schedule(now_ + 4.0 * cfg_.network.hop_latency_s, Ev::dispatch, qi);
  q.phase = Phase::running;
}

void Engine::plan_fog(Req& q, std::size_t qi) {
  q.kind = "fog";
  for (std::size_t k = 0; k < q.positions.size(); ++k) assign(qi, k, q.fog);
  schedule(now_, Ev::dispatch, qi);
  q.phase = Phase::running;
}

void Engine::assign(std::size_t qi, std::size_t pos, std::size_t dev) {
  auto& q = reqs_[qi];
  const auto& t = q.task(pos);
  Job j;
  j.req = qi;
  j.pos = pos;
  j.device = dev;
  j.cycles = t.size_alpha * t.intensity_delta * (devices_[dev].fog ? cfg_.hardware.fog_emulation_factor : 1.0);
  j.assign_time = now_;
  devices_[dev].committed_cycles += j.cycles;
  q.job_of[pos] = jobs_.size();
  jobs_.push_back(j);
}

void Engine::on_dispatch(std::size_t qi) {
  auto& q = reqs_[qi];
  if (q.terminal()) return;
  for (std::size_t k = 0; k < q.positions.size(); ++k) {
    if (q.deps_left[k] == 0) make_ready(q.job_of[k], q.requester);
  }
}

// ---------------------------------------------------------------------------
// transfers

void Engine::link_advance(std::size_t ap) {
  auto& l = links_[ap];
  if (!l.remaining_bits.empty()) {
    const double rate = cfg_.network.bandwidth_bps / static_cast<double>(l.remaining_bits.size());
    const double sent = rate * (now_ - l.last_update);
    for (auto& [job, bits] : l.remaining_bits) bits = std::max(0.0, bits - sent);
  }
  l.last_update = now_;
}

void Engine::link_reschedule(std::size_t ap) {
  auto& l = links_[ap];
  ++l.version;
  if (l.remaining_bits.empty()) return;
  double least = std::numeric_limits<double>::infinity();
  for (const auto& [job, bits] : l.remaining_bits) least = std::min(least, bits);
  const double rate = cfg_.network.bandwidth_bps / static_cast<double>(l.remaining_bits.size());
  schedule(now_ + least / rate, Ev::link_done, ap, l.version);
}

void Engine::make_ready(std::size_t ji, std::size_t source) {
  auto& j = jobs_[ji];
  j.ready_time = now_;
  j.source = source;
  const auto& t = reqs_[j.req].task(j.pos);
  j.hops = hops(source, j.device);
  const double bits = t.size_alpha * cfg_.network.block_bits;
  if (j.hops == 0.0 || bits <= 0.0) {
    enqueue(ji);
    return;
  }
  // Radio energy: the sender plus every access point that relays.
  const double airtime = bits / cfg_.network.bandwidth_bps;
  charge(source, "radio", devices_[source].hw.tx_power * airtime);
  const auto& src = devices_[source];
  const auto& dst = devices_[j.device];
  std::vector<std::size_t> relays;
  if (!src.fog && !dst.fog) {
    relays.push_back(src.ap);
    if (dst.ap != src.ap) relays.push_back(dst.ap);
  } else if (src.fog != dst.fog) {
    const auto& ue = src.fog ? dst : src;
    const auto& fog = src.fog ? src : dst;
    if (ue.ap != fog.ap) relays.push_back(ue.ap);
  }
  for (const auto ap : relays) {
    const auto f = pool_.size() + ap;
    charge(f, "radio", devices_[f].hw.tx_power * airtime);
  }
  j.state = JobState::transferring;
  j.link = dst.ap;
  link_advance(j.link);
  links_[j.link].remaining_bits[ji] = bits;
  link_reschedule(j.link);
}

void Engine::on_link_done(std::size_t ap, std::uint64_t version) {
  auto& l = links_[ap];
  if (version != l.version) return;
  link_advance(ap);
  std::vector<std::size_t> finished;
  for (const auto& [job, bits] : l.remaining_bits) {
    if (bits <= 1e-6) finished.push_back(job);
  }
  for (const auto job : finished) {
    l.remaining_bits.erase(job);
    schedule(now_ + jobs_[job].hops * cfg_.network.hop_latency_s, Ev::transfer_done, job);
  }
  link_reschedule(ap);
}

void Engine::on_transfer_done(std::size_t ji) {
  if (jobs_[ji].state != JobState::transferring) return;
  enqueue(ji);
}

// ---------------------------------------------------------------------------
// execution

void Engine::enqueue(std::size_t ji) {
  auto& j = jobs_[ji];
  j.state = JobState::queued;
  const auto& q = reqs_[j.req];
  devices_[j.device].ready.emplace(q.r.arrival_time, j.req, j.pos, ji);
  try_start(j.device);
}

void Engine::try_start(std::size_t dev) {
  auto& d = devices_[dev];
  if (d.running != kNone || d.ready.empty()) return;
  const auto ji = std::get<3>(*d.ready.begin());
  d.ready.erase(d.ready.begin());
  auto& j = jobs_[ji];
  const auto& q = reqs_[j.req];
  const auto& t = q.task(j.pos);
  j.state = JobState::running;
  j.start_time = now_;
  d.running = ji;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool drop = false;
  double drop_at = 1.0;
  if (d.fog) {
    const double time_noise = noise_.time_sigma > 0.0 ? std::exp(noise_.time_sigma * gauss(rng_noise_)) : 1.0;
    const double energy_noise = noise_.energy_sigma > 0.0 ? std::exp(noise_.energy_sigma * gauss(rng_noise_)) : 1.0;
    j.run_s = j.cycles / d.hw.cpu_rate * time_noise;
    j.energy_j = j.cycles * d.hw.energy_per_cycle * energy_noise;
    j.quality = 1.0;
  } else {
    const auto& p = pool_[dev];
    const auto disp = static_cast<std::size_t>(p.disposition);
    auto pr = predict_outcome(p, t, NetState{}, quality_, cfg_.reward);
    pr.outcome.achieved_q *= cfg_.dispositions.quality[disp];
    const auto real = realize_outcome(pr, t, noise_, rng_noise_);
    j.run_s = real.compute_s / cfg_.dispositions.cpu_share[disp];
    j.energy_j = real.compute_j;
    j.quality = real.outcome.achieved_q;
    drop = unit(rng_noise_) < cfg_.dispositions.drop[disp];
    if (drop) drop_at = unit(rng_noise_);
  }
  if (drop) {
    schedule(now_ + drop_at * j.run_s, Ev::job_drop, ji);
  } else {
    schedule(now_ + j.run_s, Ev::job_finish, ji);
  }
}

// Frees the device and books time and energy of a job that stops now.
void Engine::release(std::size_t ji, JobState final_state) {
  auto& j = jobs_[ji];
  auto& d = devices_[j.device];
  if (j.state == JobState::running) {
    const double elapsed = now_ - j.start_time;
    d.usage.busy_s += elapsed;
    ++d.usage.tasks_run;
    charge(j.device, "compute", j.run_s > 0.0 ? j.energy_j * std::min(1.0, elapsed / j.run_s) : 0.0);
    d.running = kNone;
  } else if (j.state == JobState::queued) {
    d.ready.erase({reqs_[j.req].r.arrival_time, j.req, j.pos, ji});
  } else if (j.state == JobState::transferring && j.link != kNone) {
    link_advance(j.link);
    links_[j.link].remaining_bits.erase(ji);
    link_reschedule(j.link);
  }
  d.committed_cycles = std::max(0.0, d.committed_cycles - j.cycles);
  d.engaged.emplace_back(j.assign_time, now_);
  j.state = final_state;
}

void Engine::on_job_end(std::size_t ji, bool dropped) {
  if (jobs_[ji].state != JobState::running) return;
  const auto dev = jobs_[ji].device;
  const auto qi = jobs_[ji].req;
  const auto pos = jobs_[ji].pos;
  release(ji, dropped ? JobState::cancelled : JobState::done);
  auto& q = reqs_[qi];
  const auto& j = jobs_[ji];
  const auto& t = q.task(pos);

  if (!q.terminal()) {
    if (dropped) {
      if (sw_.incentives) {
        behavior::CompositionMembers members;
        members.fog = devices_[q.fog].usage.id;
        for (std::size_t k = 0; k < q.positions.size(); ++k) {
          members.members.insert(q.positions[k].options[q.picks[k]].participant);
        }
        record_rank({behavior::RaterKind::fog, members.fog, pool_[dev].id, t.id, 0.0, now_}, members);
        refresh(pool_[dev]);
      }
      reassign(qi, pos, j.source);
    } else {
      ActualOutcome o;
      o.achieved_q = j.quality;
      o.completion_time = now_ - j.ready_time;
      o.workload_delta = t.deadline_gamma > 0.0 ? std::min(1.0, j.run_s / t.deadline_gamma) : 1.0;
      const double nominal = t.size_alpha * t.energy_zeta;
      o.energy_used = j.energy_j + nominal > 0.0 ? j.energy_j / (j.energy_j + nominal) : 0.0;
      o.completed = true;
      q.outcomes[pos] = o;
      q.done[pos] = true;
      q.finished_at[pos] = now_;
      if (!devices_[dev].fog) {
        const auto& pid = pool_[dev].id;
        q.scores[pid].push_back(chain::rank_score(t, o));
        if (sw_.incentives) {
          const auto g = incentive::compute_gain(incentive::TaskExecution{t.deadline_gamma, q.r.qos_q, o},
                                                 cfg_.reward);
          push_bounded(pool_[dev].gain_history, g.gain_g, cfg_.participation.gain_window);
        }
      }
      for (const auto c : q.children[pos]) {
        if (--q.deps_left[c] == 0) make_ready(q.job_of[c], dev);
      }
      if (q.has_chain) append_ready_blocks(qi);
      if (!q.terminal() && std::all_of(q.done.begin(), q.done.end(), [](bool b) { return b; })) complete(qi);
    }
  }
  try_start(dev);
}

void Engine::reassign(std::size_t qi, std::size_t pos, std::size_t source) {
  auto& q = reqs_[qi];
  auto& opts = q.positions[pos].options;
  q.excluded[pos].insert(opts[q.picks[pos]].participant);
  if (++q.attempts[pos] > cfg_.participation.max_reassign) {
    fail(qi, "task '" + q.task(pos).id.str() + "' was dropped");
    return;
  }
  std::vector<std::size_t> left;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    const auto d = device_of(opts[i].participant);
    if (q.excluded[pos].count(opts[i].participant) == 0 && pool_[d].status == ParticipantStatus::active) {
      left.push_back(i);
    }
  }
  if (left.empty()) {
    fail(qi, "task '" + q.task(pos).id.str() + "' was dropped and no alternative is left");
    return;
  }
  std::size_t pick = left.front();
  if (sw_.incentives) {
    for (const auto i : left) {
      if (opts[i].anticipated_gain > opts[pick].anticipated_gain) pick = i;
    }
  } else {
    pick = left[std::uniform_int_distribution<std::size_t>(0, left.size() - 1)(rng_dec_)];
  }
  q.picks[pos] = pick;
  assign(qi, pos, device_of(opts[pick].participant));
  if (q.deps_left[pos] == 0) make_ready(q.job_of[pos], source);
}

void Engine::append_ready_blocks(std::size_t qi) {
  auto& q = reqs_[qi];
  std::vector<std::string> committee;
  for (std::size_t k = 0; k < q.positions.size(); ++k) {
    committee.push_back(q.positions[k].options[q.picks[k]].participant.str());
  }
  while (q.appended < q.positions.size() && q.done[q.appended]) {
    const auto k = q.appended;
    const auto& pos = q.positions[k];
    const auto& opt = pos.options[q.picks[k]];
    const FeatureSet& prev =
        k == 0 ? q.r.description_d : q.positions[k - 1].options[q.picks[k - 1]].output;
    const auto& o = q.outcomes[k];
    const double advertised = similarity::comp_char(prev, opt.input, cfg_.reward);
    if (sw_.learning) {
      matrix_.record_similarity(pos.slot, opt.participant, advertised * o.achieved_q);
      matrix_.update_value(pos.slot, opt.participant, matrix_.block_reward(pos.slot, opt.participant, advertised));
    }
    chain::BlockFields f;
    f.task = pos.task->id;
    f.participant = opt.participant;
    f.miner = opt.miner;
    f.input_features = opt.input;
    f.output_features = opt.output;
    f.outcome = o;
    f.reward_paid = sw_.incentives ? chain::block_reward_credits(*pos.task, q.r.qos_q, o, cfg_.reward) : Credits{};
    f.timestamp = q.finished_at[k];
    f.sensitive = pos.task->sensitive;
    q.reward += f.reward_paid;
    auto& block = chain::append_block(q.chain, std::move(f));
    chain::attest_block(block, committee, devices_[q.fog].usage.id);
    ++q.appended;
    if (advertised < cfg_.formation.chaining_floor) {
      fail(qi, "block for task '" + pos.task->id.str() + "' is below the chaining floor");
      return;
    }
  }
}

void Engine::complete(std::size_t qi) {
  auto& q = reqs_[qi];
  q.phase = Phase::complete;
  q.completion = now_;
  --open_requests_;
  if (!q.has_chain) return;
  chain::complete_chain(q.chain);
  if (!sw_.incentives) return;

  const auto paid = book_.distribute(q.chain, cfg_.reward);
  for (const auto& post : paid.postings) {
    auto& p = pool_[device_of(post.recipient)];
    p.rewards_accumulated += post.amount;
    (post.role == chain::PostingRole::miner ? rewards_miner_ : rewards_ue_) += post.amount.units();
  }

  behavior::CompositionMembers members;
  members.fog = devices_[q.fog].usage.id;
  for (const auto& [id, s] : q.scores) members.members.insert(id);
  for (const auto& [ratee, s] : q.scores) {
    double mean = 0.0;
    for (const auto v : s) mean += v;
    mean /= static_cast<double>(s.size());
    for (const auto& [rater, unused] : q.scores) {
      if (rater != ratee) {
        record_rank({behavior::RaterKind::participant, rater.str(), ratee, TaskId(), mean, now_}, members);
      }
    }
    record_rank({behavior::RaterKind::fog, members.fog, ratee, TaskId(), mean, now_}, members);
  }
  for (const auto& [id, s] : q.scores) refresh(pool_[device_of(id)]);
}

void Engine::fail(std::size_t qi, std::string reason) {
  auto& q = reqs_[qi];
  if (q.terminal()) return;
  q.phase = Phase::failed;
  q.failure = reason;
  --open_requests_;
  if (q.has_chain && q.chain.status == chain::ChainStatus::forming) chain::fail_chain(q.chain, reason);
  std::set<std::size_t> touched;
  for (const auto ji : q.job_of) {
    if (ji == kNone) continue;
    const auto st = jobs_[ji].state;
    if (st == JobState::done || st == JobState::cancelled) continue;
    touched.insert(jobs_[ji].device);
    release(ji, JobState::cancelled);
  }
  for (const auto d : touched) try_start(d);
}

// ---------------------------------------------------------------------------
// background processes

void Engine::on_mobility() {
  step_mobility(movers_, cfg_.population.mobility_tick_s, area_, rng_mob_);
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    pool_[i].position = movers_[i].position;
    devices_[i].ap = nearest_ap(movers_[i].position);
  }
  if (work_pending()) schedule(now_ + cfg_.population.mobility_tick_s, Ev::mobility, 0);
}

void Engine::on_promotion() {
  std::size_t active = 0;
  for (const auto& p : pool_) active += p.status == ParticipantStatus::active ? 1 : 0;
  behavior::TrustPolicy tp;
  tp.kappa = cfg_.behavior.trust_kappa;
  tp.target_participants = cfg_.behavior.trust_target;
  tp.min_threshold = cfg_.behavior.trust_min;
  tp.max_threshold = cfg_.behavior.trust_max;
  trust_ = behavior::update_trust_threshold(trust_, active, tp);
  behavior::MinerPolicy mp;
  mp.cap_fraction = cfg_.population.miner_fraction;
  mp.hysteresis = cfg_.behavior.miner_hysteresis;
  behavior::promote_miners(pool_, trust_, mp);
  if (work_pending() || now_ == 0.0) schedule(now_ + cfg_.behavior.promotion_interval_s, Ev::promotion, 0);
}

void Engine::refresh(Participant& p) {
  const behavior::AggregateConfig ac{cfg_.behavior.prior, cfg_.behavior.fog_weight};
  const double agg = behavior::aggregate_score(p.id, out_.ranks, cfg_.behavior.rank_window, ac);
  const auto fz = behavior::fuzzify(agg);
  p.coop_score_c = fz.c_n;
  p.category = fz.category;
  // Bans are part of the incentive mechanism; without it everybody stays in.
  if (sw_.incentives) p = behavior::update_status(p, status_);
}

void Engine::record_rank(const behavior::RankEvent& e, const behavior::CompositionMembers& members) {
  out_.ranks.record(e, members);
}

// ---------------------------------------------------------------------------
// metrics

void Engine::finish_metrics() {
  auto& m = out_.metrics;
  m.mode = cfg_.run.mode;
  m.seed = cfg_.run.seed;
  m.ue_count = cfg_.population.ue_count;
  m.batch_size = cfg_.requests.arrival == ArrivalKind::batch ? cfg_.requests.batch_size : cfg_.requests.poisson_count;
  m.tasks_per_request = cfg_.requests.tasks_max;

  // Utilization over the service window, from the first arrival to the last
  // request deadline. Requests come from their own random stream, so every
  // mode sees the same window for a seed and the figure reflects how
  // concentrated the load was.
  double window_start = std::numeric_limits<double>::infinity();
  double window_end = 0.0;
  for (const auto& q : reqs_) {
    if (q.phase == Phase::waiting) continue;
    window_start = std::min(window_start, q.r.arrival_time);
    window_end = std::max(window_end, q.deadline);
  }
  const double window = std::isfinite(window_start) ? window_end - window_start : 0.0;
  double usage_sum = 0.0;
  std::size_t usage_n = 0;
  double energy = 0.0;
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    auto& d = devices_[i];
    auto iv = d.engaged;
    std::sort(iv.begin(), iv.end());
    double engaged = 0.0;
    double open_start = 0.0;
    double open_end = -1.0;
    for (const auto& [a, b] : iv) {
      if (open_end < 0.0 || a > open_end) {
        if (open_end >= 0.0) engaged += open_end - open_start;
        open_start = a;
        open_end = b;
      } else {
        open_end = std::max(open_end, b);
      }
    }
    if (open_end >= 0.0) engaged += open_end - open_start;
    d.usage.engaged_s = engaged;
    charge(i, "idle", d.hw.idle_power * std::max(0.0, engaged - d.usage.busy_s));
    if (d.usage.tasks_run > 0 && window > 0.0) {
      usage_sum += std::min(1.0, d.usage.busy_s / window);
      ++usage_n;
    }
    energy += d.usage.compute_j + d.usage.radio_j + d.usage.idle_j;
    out_.devices.push_back(d.usage);
  }
  m.cpu_usage = usage_n > 0 ? usage_sum / static_cast<double>(usage_n) : 0.0;
  m.energy_j = energy;

  m.request_count = reqs_.size();
  double delay = 0.0;
  for (const auto& q : reqs_) {
    RequestRow row;
    row.id = q.r.id.str();
    row.arrival = q.r.arrival_time;
    row.kind = q.kind;
    row.complete = q.phase == Phase::complete;
    row.failure = q.failure;
    row.delay_s = row.complete ? q.completion - q.r.arrival_time : 0.0;
    row.tasks = q.r.tasks.size();
    row.mined_blocks = q.mined;
    row.reward = q.reward.units();
    if (row.complete) {
      ++m.completed;
      delay += row.delay_s;
    }
    out_.requests.push_back(std::move(row));
    if (q.has_chain) out_.chains.push_back(q.chain);
  }
  m.vacuous = reqs_.empty();
  m.hit_ratio = m.vacuous ? 1.0 : static_cast<double>(m.completed) / static_cast<double>(m.request_count);
  m.delay_s = m.completed > 0 ? delay / static_cast<double>(m.completed) : 0.0;
  m.rewards_ue = rewards_ue_;
  m.rewards_miner = rewards_miner_;
}

}  // namespace

RunOutput run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  Engine engine(cfg);
  return engine.run();
}

}  // namespace volchain::sim
