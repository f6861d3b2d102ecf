#include "roll/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <memory>

#include "roll/error.hpp"
#include "roll/fusion.hpp"
#include "roll/matching.hpp"
#include "roll/temporal.hpp"

namespace roll {

namespace {

struct Prepared {
  FeatureFrame frame;  // downsampled at `leaf`
  double leaf = 0.0;
};

Prepared prepare(const Scan& scan, const SessionConfig& cfg) {
  Prepared p;
  const FeatureFrame raw = extract_features(scan.cloud, scan.rings, cfg.features);
  const double ratio = confined_ratio(scan.cloud, cfg.d_c);
  p.leaf = choose_voxel_size(ratio, cfg.r_c, cfg.open_leaf, cfg.confined_leaf);
  p.frame = downsample_features(raw, p.leaf);
  p.frame.confined = ratio > cfg.r_c;
  p.frame.timestamp = scan.cloud.timestamp;
  return p;
}

// Fusion either inline or on the worker thread.
class Fusion {
 public:
  Fusion(const SessionConfig& cfg, const Pose& drift) {
    if (cfg.deterministic) {
      engine_ = std::make_unique<FusionEngine>(cfg.fusion, drift);
    } else {
      worker_ = std::make_unique<FusionWorker>(cfg.fusion, drift);
    }
  }
  void push_odom(double t, const Pose& odom) {
    engine_ ? engine_->push_odom(t, odom) : worker_->push_odom(t, odom);
  }
  void push_gm(double t, const Pose& gm) {
    if (engine_) {
      engine_->push_gm(t, gm);
    } else {
      worker_->push_gm(t, gm);
    }
  }
  Pose drift() const { return engine_ ? engine_->drift().T : worker_->snapshot().T; }
  std::size_t rejects() {
    if (engine_) return engine_->reject_count();
    worker_->flush();
    return worker_->reject_count();
  }

 private:
  std::unique_ptr<FusionEngine> engine_;
  std::unique_ptr<FusionWorker> worker_;
};

Pose perturb_gm(const Pose& gm, std::size_t k, const Injection& inj) {
  Pose out = gm;
  if (inj.gm_noise > 0.0) {
    for (int a = 0; a < 3; ++a) {
      out.p[a] += inj.gm_noise * hashed_gaussian(inj.gm_noise_seed, k, static_cast<std::uint64_t>(a), 2);
    }
  }
  return out;
}

bool in_burst(std::size_t k, const Injection& inj) {
  return inj.burst_start >= 0 && static_cast<long>(k) >= inj.burst_start &&
         static_cast<long>(k) < inj.burst_start + inj.burst_length;
}

}  // namespace

GlobalMap build_map(const ScanSource& scans, const Trajectory& truth, const SessionConfig& cfg) {
  validate(cfg);
  if (truth.size() < scans.size()) {
    throw Error(ErrorCode::InvalidParameter, "truth poses do not cover every scan");
  }
  GlobalMap map;
  std::optional<Pose> last;
  for (std::size_t k = 0; k < scans.size(); ++k) {
    const Pose& pose = truth[k].pose;
    if (last && !should_cull(*last, pose, cfg.cull_trans, cfg.cull_rot)) continue;
    const Prepared p = prepare(scans.get(k), cfg);
    if (p.frame.empty()) continue;
    map.insert(make_keyframe(map.next_id(), pose, p.frame, p.leaf));
    last = pose;
  }
  return map;
}

SessionConfig scenario_config(const Scenario& sc, SessionConfig base) {
  for (const auto& [k, v] : sc.config) apply_setting(base, k, v);
  validate(base);
  return base;
}

SessionReport run_session(GlobalMap map, const ScanSource& scans, const Trajectory& odom,
                          const SessionConfig& cfg) {
  validate(cfg);
  if (odom.size() < scans.size()) {
    throw Error(ErrorCode::InvalidParameter, "odometry does not cover every scan");
  }
  if (!cfg.initial_pose) {
    throw Error(ErrorCode::ConfigError, "initial pose is required");
  }
  SessionReport rep;
  if (scans.size() == 0) {
    rep.map = std::move(map);
    return rep;
  }

  Pose match_drift = *cfg.initial_pose * inverse(odom.front().pose);
  Fusion fusion(cfg, match_drift);
  AnomalyState state;
  state.mu_E = cfg.mu_E;
  state.mu_M = cfg.mu_M;
  TempBuffer buffer(cfg.window_cap);
  LocalMapCache cache(cfg.local_radius);

  auto event = [&](const char* kind, std::size_t k, const Pose& pose, double mu, std::size_t n) {
    rep.events.push_back({kind, k, odom[k].t, pose, mu, n});
  };

  for (std::size_t k = 0; k < scans.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    const double t = odom[k].t;
    const Pose& od = odom[k].pose;
    const Pose guess = predict_pose(match_drift, od);
    rep.guesses.push_back({t, guess});
    rep.direct.push_back({t, guess});
    if (cfg.fusion_enabled) {
      fusion.push_odom(t, od);
      rep.fused.push_back({t, compose(fusion.drift(), od)});
    } else {
      rep.fused.push_back({t, guess});
    }

    const Prepared prep = prepare(scans.get(k), cfg);
    ScanRecord rec;
    rec.t = t;
    std::optional<MatchResult> res;
    try {
      const LocalMap& local = cache.get(map, guess);
      res = optimize(prep.frame, guess, local, cfg.match);
      rec.matched = true;
      rec.mu = res->inlier_ratio;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoNearbyKeyframes && k == 0) {
        throw Error(ErrorCode::LocalizationAbort,
                    "no keyframes near the initial pose; relocalization is not supported");
      }
      if (e.code() == ErrorCode::NumericalFailure) {
        rep.aborted = true;
        rep.abort_reason = e.what();
        rep.scans.push_back(rec);
        break;
      }
      if (e.code() != ErrorCode::NoNearbyKeyframes &&
          e.code() != ErrorCode::InsufficientCorrespondences) {
        throw;
      }
    }

    AnomalyEvent ev = AnomalyEvent::None;
    if (cfg.tm_enabled) {
      std::tie(state, ev) = anomaly_step(state, rec.mu, k);
    }

    auto make_frame = [&](const Pose& obs, std::optional<Pose> gm) {
      TempFrame f;
      f.keyframe = make_keyframe(0, obs, prep.frame, prep.leaf);
      f.odom_pose = od;
      f.gm_pose = gm;
      f.t = t;
      return f;
    };
    auto frame_due = [&](const Pose& obs) {
      return buffer.empty() || should_cull(buffer.back().keyframe.obs_pose, obs, cfg.cull_trans,
                                           cfg.cull_rot);
    };

    if (state.mode == Mode::Normal && res) {
      const Pose gm = perturb_gm(res->pose, k, cfg.inject);
      match_drift = gm * inverse(od);
      rec.gm_used = true;
      if (cfg.fusion_enabled) {
        Pose to_fusion = gm;
        if (in_burst(k, cfg.inject)) to_fusion.p.x() += cfg.inject.burst_offset;
        fusion.push_gm(t, to_fusion);
      }
      if (ev == AnomalyEvent::ExitTM) {
        event("ExitTM", k, gm, rec.mu, buffer.size() + 1);
        if (!prep.frame.empty()) buffer.push_tm(make_frame(gm, gm));
        TmCloseResult closed = close_tm_session(buffer, gm, cfg.tm_cov, cfg.graph);
        const std::size_t nodes = closed.keyframes.size();
        std::erase_if(closed.keyframes, [](const Keyframe& kf) { return kf.features.empty(); });
        MergeReport merge =
            merge_temporary(map, std::move(closed.keyframes), cfg.replace_radius, cfg.session_id);
        event("Merge", k, gm, rec.mu, nodes);
        rep.merges.push_back(std::move(merge));
        cache.invalidate();
        buffer.clear();
      }
      if (!prep.frame.empty() && frame_due(gm)) buffer.push_window(make_frame(gm, gm));
    } else if (state.mode == Mode::TemporaryMapping) {
      if (ev == AnomalyEvent::EnterTM) {
        ++rep.tm_count;
        event("EnterTM", k, guess, rec.mu, buffer.size());
      }
      if (!prep.frame.empty() && frame_due(guess)) buffer.push_tm(make_frame(guess, std::nullopt));
    }

    rec.mode = state.mode;
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rep.scans.push_back(rec);
  }

  if (state.mode == Mode::TemporaryMapping) {
    const std::size_t k = rep.scans.size() - 1;
    event("DiscardTM", k, rep.direct.back().pose, rep.scans.back().mu, buffer.size());
    rep.warnings.push_back("session ended in temporary mapping; " + std::to_string(buffer.size()) +
                           " temporary keyframes discarded");
  }
  rep.fusion_rejects = cfg.fusion_enabled ? fusion.rejects() : 0;
  rep.map = std::move(map);
  return rep;
}

std::string format_events(const std::vector<SessionEvent>& events) {
  std::string out;
  char buf[512];
  for (const auto& e : events) {
    const auto& p = e.pose;
    std::snprintf(buf, sizeof buf,
                  "{\"t\":%.17g,\"event\":\"%s\",\"index\":%zu,\"pose\":[%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g],"
                  "\"mu\":%.17g,\"node_count\":%zu}\n",
                  e.t, e.kind.c_str(), e.index, p.p.x(), p.p.y(), p.p.z(), p.q.x(), p.q.y(),
                  p.q.z(), p.q.w(), e.mu, e.node_count);
    out += buf;
  }
  return out;
}

}  // namespace roll
