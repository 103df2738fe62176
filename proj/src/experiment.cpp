#include "startls/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace startls {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double mean_db(const std::vector<double>& linear_values) {
  double acc = 0.0;
  for (double v : linear_values) acc += v;
  acc /= static_cast<double>(linear_values.size());
  return acc > 0.0 ? std::max(10.0 * std::log10(acc), kNmsdFloorDb) : kNmsdFloorDb;
}

// Linear misalignment ratio ||est - truth||^2 / ||truth||^2.
double msd_ratio(const Vec& estimate, const Vec& truth) {
  return (estimate - truth).squaredNorm() / truth.squaredNorm();
}

LayerStack<double> make_stack(const ExperimentConfig& cfg, int layers) {
  const bool exclude = cfg.estimator.exclude_first_layer && layers > 1;
  return LayerStack<double>::make(cfg.scenario.si_len, cfg.scenario.rt_len, layers,
                                  cfg.estimator.mu, cfg.estimator.gamma,
                                  cfg.estimator.nw, cfg.estimator.lambda_sigma,
                                  cfg.estimator.c1, !exclude);
}

std::vector<JointSample<double>> to_joint_samples(
    const std::vector<SignalRecord>& records) {
  std::vector<JointSample<double>> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out[i].y = records[i].y;
    out[i].adapt_ref = records[i].i_obs_vec;
    out[i].cancel_ref = records[i].i_vec;
    out[i].pilot = records[i].x_vec;
  }
  return out;
}

}  // namespace

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 0) {
    jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
  }
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

Fig2Curves run_fig2(const ExperimentConfig& config, int trials, int jobs,
                    int horizon) {
  const EstimatorConfig& est = config.estimator;
  constexpr int kDim = 10;

  std::vector<std::vector<double>> lms(static_cast<std::size_t>(trials));
  std::vector<std::vector<double>> tls(static_cast<std::size_t>(trials));
  std::vector<std::vector<double>> mtls(static_cast<std::size_t>(trials));

  parallel_for(trials, jobs, [&](int t) {
    auto rng = make_rng(mix_seed(config.scenario.seed, static_cast<std::uint64_t>(t)));
    const Fig2Testbench tb = fig2_testbench(rng, horizon);

    auto lms_state = FilterState<double>::make(kDim, est.mu, est.gamma, Algorithm::kLms);
    auto tls_state = FilterState<double>::make(kDim, est.mu, est.gamma, Algorithm::kTls);
    auto mtls_state = FilterState<double>::make(kDim, est.mu, est.gamma, Algorithm::kMtls);
    auto mest = MEstimateState<double>::make(est.nw, est.lambda_sigma, est.c1);

    auto& l = lms[static_cast<std::size_t>(t)];
    auto& s = tls[static_cast<std::size_t>(t)];
    auto& m = mtls[static_cast<std::size_t>(t)];
    l.resize(static_cast<std::size_t>(horizon));
    s.resize(static_cast<std::size_t>(horizon));
    m.resize(static_cast<std::size_t>(horizon));

    for (int n = 0; n < horizon; ++n) {
      const auto& sample = tb.samples[static_cast<std::size_t>(n)];
      detail::lms_update_inplace(lms_state, sample.input, sample.output);
      detail::tls_update_inplace(tls_state, sample.input, sample.output);
      detail::mtls_update_inplace(mtls_state, mest, sample.input, sample.output);
      l[static_cast<std::size_t>(n)] = msd_ratio(lms_state.weights, tb.truth);
      s[static_cast<std::size_t>(n)] = msd_ratio(tls_state.weights, tb.truth);
      m[static_cast<std::size_t>(n)] = msd_ratio(mtls_state.weights, tb.truth);
    }
  });

  Fig2Curves out;
  out.horizon = horizon;
  out.nmsd_lms_db.resize(static_cast<std::size_t>(horizon));
  out.nmsd_tls_db.resize(static_cast<std::size_t>(horizon));
  out.nmsd_mtls_db.resize(static_cast<std::size_t>(horizon));
  for (int n = 0; n < horizon; ++n) {
    double al = 0.0, at = 0.0, am = 0.0;
    for (int t = 0; t < trials; ++t) {
      al += lms[static_cast<std::size_t>(t)][static_cast<std::size_t>(n)];
      at += tls[static_cast<std::size_t>(t)][static_cast<std::size_t>(n)];
      am += mtls[static_cast<std::size_t>(t)][static_cast<std::size_t>(n)];
    }
    const double inv = 1.0 / trials;
    out.nmsd_lms_db[static_cast<std::size_t>(n)] = db_from_power(al * inv);
    out.nmsd_tls_db[static_cast<std::size_t>(n)] = db_from_power(at * inv);
    out.nmsd_mtls_db[static_cast<std::size_t>(n)] = db_from_power(am * inv);
  }
  return out;
}

SpectrumResult run_spectrum(const ExperimentConfig& config, int trials, int jobs) {
  const StarScenario& sc = config.scenario;
  const int segment = 256;

  std::vector<Vec> psd_rx(static_cast<std::size_t>(trials));
  std::vector<Vec> psd_rt(static_cast<std::size_t>(trials));
  std::vector<Vec> psd_post(static_cast<std::size_t>(trials));
  std::vector<double> pow_rx(static_cast<std::size_t>(trials));
  std::vector<double> pow_rt(static_cast<std::size_t>(trials));
  std::vector<double> pow_post(static_cast<std::size_t>(trials));
  Vec freqs;

  parallel_for(trials, jobs, [&](int t) {
    auto rng = make_rng(mix_seed(sc.seed, static_cast<std::uint64_t>(t)));
    const ChannelRealization channels = gen_channels(sc, rng);
    const std::vector<SignalRecord> records = synthesize(sc, channels, rng);
    const auto samples = to_joint_samples(records);

    auto trace = run_training(make_stack(config, config.estimator.layers), samples,
                              sc.ns, channels.si_taps, channels.rt_taps);
    const Vec si_hat = trace.final_si_cumulative;

    Vec rx(sc.ns), rtn(sc.ns), post(sc.ns);
    for (int n = 0; n < sc.ns; ++n) {
      const auto& r = records[static_cast<std::size_t>(n)];
      rx[n] = r.y;
      rtn[n] = r.rt_component + r.noise;
      post[n] = r.y - si_hat.dot(r.i_vec);
    }
    const std::size_t ti = static_cast<std::size_t>(t);
    auto linear = [](const PowerSpectrum& p) {
      Vec v(p.psd_db.size());
      for (int k = 0; k < p.psd_db.size(); ++k) v[k] = power_from_db(p.psd_db[k]);
      return v;
    };
    const PowerSpectrum ps = power_spectrum(rx, sc.sample_rate_hz, segment);
    psd_rx[ti] = linear(ps);
    psd_rt[ti] = linear(power_spectrum(rtn, sc.sample_rate_hz, segment));
    psd_post[ti] = linear(power_spectrum(post, sc.sample_rate_hz, segment));
    pow_rx[ti] = rx.squaredNorm() / sc.ns;
    pow_rt[ti] = rtn.squaredNorm() / sc.ns;
    pow_post[ti] = post.squaredNorm() / sc.ns;
    if (t == 0) freqs = ps.freqs_hz;
  });

  SpectrumResult out;
  out.freqs_hz = freqs;
  const int bins = static_cast<int>(freqs.size());
  out.psd_rx_db = Vec(bins);
  out.psd_rt_db = Vec(bins);
  out.psd_post_sic_db = Vec(bins);
  for (int k = 0; k < bins; ++k) {
    double rx = 0.0, rt = 0.0, post = 0.0;
    for (int t = 0; t < trials; ++t) {
      rx += psd_rx[static_cast<std::size_t>(t)][k];
      rt += psd_rt[static_cast<std::size_t>(t)][k];
      post += psd_post[static_cast<std::size_t>(t)][k];
    }
    out.psd_rx_db[k] = db_from_power(rx / trials);
    out.psd_rt_db[k] = db_from_power(rt / trials);
    out.psd_post_sic_db[k] = db_from_power(post / trials);
  }
  out.rx_power_db = mean_db(pow_rx);
  out.rt_noise_power_db = mean_db(pow_rt);
  out.post_sic_power_db = mean_db(pow_post);
  return out;
}

std::vector<CompareRow> run_compare(const ExperimentConfig& config,
                                    const std::vector<double>& snr_points_db,
                                    int trials, int jobs) {
  std::vector<CompareRow> rows;
  rows.reserve(snr_points_db.size());
  for (std::size_t p = 0; p < snr_points_db.size(); ++p) {
    ExperimentConfig cfg = config;
    cfg.scenario.snr_db = snr_points_db[p];
    const StarScenario& sc = cfg.scenario;

    std::vector<double> mmse(static_cast<std::size_t>(trials));
    std::vector<double> mtls(static_cast<std::size_t>(trials));
    std::vector<double> mmtls(static_cast<std::size_t>(trials));

    parallel_for(trials, jobs, [&](int t) {
      auto rng = make_rng(mix_seed(
          sc.seed, (static_cast<std::uint64_t>(p) << 32) |
                       static_cast<std::uint64_t>(t)));
      const ChannelRealization channels = gen_channels(sc, rng);
      const std::vector<SignalRecord> records = synthesize(sc, channels, rng);
      const auto samples = to_joint_samples(records);
      const std::size_t ti = static_cast<std::size_t>(t);

      const auto mmse_est =
          mmse_baseline(records, sc.si_len, sc.rt_len, noise_variance(sc));
      mmse[ti] = msd_ratio(mmse_est.rt_part, channels.rt_taps);

      auto trace1 = run_training(make_stack(cfg, 1), samples, sc.ns,
                                 channels.si_taps, channels.rt_taps);
      mtls[ti] = msd_ratio(trace1.final_rt_average, channels.rt_taps);

      auto trace_l = run_training(make_stack(cfg, cfg.estimator.layers), samples,
                                  sc.ns, channels.si_taps, channels.rt_taps);
      mmtls[ti] = msd_ratio(trace_l.final_rt_average, channels.rt_taps);
    });

    CompareRow row;
    row.snr_db = snr_points_db[p];
    row.nmsd_mmse_db = mean_db(mmse);
    row.nmsd_mtls_db = mean_db(mtls);
    row.nmsd_mmtls_db = mean_db(mmtls);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                const std::vector<double>& isr_points_db,
                                const std::vector<int>& layer_counts, int trials,
                                int jobs) {
  std::vector<SweepRow> rows;
  rows.reserve(isr_points_db.size());
  for (std::size_t p = 0; p < isr_points_db.size(); ++p) {
    ExperimentConfig cfg = config;
    cfg.scenario.isr_db = isr_points_db[p];
    const StarScenario& sc = cfg.scenario;

    std::vector<std::vector<double>> msd(
        layer_counts.size(), std::vector<double>(static_cast<std::size_t>(trials)));

    parallel_for(trials, jobs, [&](int t) {
      auto rng = make_rng(mix_seed(
          sc.seed, (static_cast<std::uint64_t>(p + 101) << 32) |
                       static_cast<std::uint64_t>(t)));
      const ChannelRealization channels = gen_channels(sc, rng);
      const std::vector<SignalRecord> records = synthesize(sc, channels, rng);
      const auto samples = to_joint_samples(records);

      for (std::size_t li = 0; li < layer_counts.size(); ++li) {
        auto trace = run_training(make_stack(cfg, layer_counts[li]), samples,
                                  sc.ns, channels.si_taps, channels.rt_taps);
        msd[li][static_cast<std::size_t>(t)] =
            msd_ratio(trace.final_rt_average, channels.rt_taps);
      }
    });

    SweepRow row;
    row.isr_db = isr_points_db[p];
    for (std::size_t li = 0; li < layer_counts.size(); ++li) {
      row.nmsd_by_layers_db.push_back(mean_db(msd[li]));
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

void write_metadata(std::ostream& out, const ExperimentSpec& spec,
                    const std::string& kind_name) {
  out << "# startls " << kind_name << " experiment\n";
  out << "# trials = " << spec.trials << '\n';
  std::istringstream echo(echo_config(spec.config));
  std::string line;
  while (std::getline(echo, line)) {
    out << "# " << line << '\n';
  }
}

void write_plot_script(const std::string& csv_path) {
  std::ofstream out(csv_path + ".plot.py");
  if (!out) return;
  out << "#!/usr/bin/env python3\n"
         "import csv\n"
         "import matplotlib.pyplot as plt\n"
         "\n"
         "path = " << '"' << csv_path << '"' << "\n"
         "with open(path) as f:\n"
         "    rows = [r for r in csv.reader(f) if r and not r[0].startswith('#')]\n"
         "header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]\n"
         "x = [r[0] for r in data]\n"
         "for col in range(1, len(header)):\n"
         "    plt.plot(x, [r[col] for r in data], label=header[col])\n"
         "plt.xlabel(header[0])\n"
         "plt.legend()\n"
         "plt.grid(True)\n"
         "plt.savefig(path + '.png', dpi=150)\n"
         "print('wrote', path + '.png')\n";
}

}  // namespace

int run_experiment(const ExperimentSpec& spec) {
  std::ofstream out(spec.output_path);
  if (!out) {
    std::fprintf(stderr, "error: cannot open output path '%s'\n",
                 spec.output_path.c_str());
    return 3;
  }

  std::ostringstream body;
  std::string kind_name;

  switch (spec.kind) {
    case ExperimentKind::kFig2Impulse: {
      kind_name = "fig2";
      const Fig2Curves c = run_fig2(spec.config, spec.trials, spec.jobs);
      body << "n,nmsd_lms_db,nmsd_tls_db,nmsd_mtls_db\n";
      for (int n = 0; n < c.horizon; ++n) {
        body << n << ',' << fmt(c.nmsd_lms_db[static_cast<std::size_t>(n)]) << ','
             << fmt(c.nmsd_tls_db[static_cast<std::size_t>(n)]) << ','
             << fmt(c.nmsd_mtls_db[static_cast<std::size_t>(n)]) << '\n';
      }
      break;
    }
    case ExperimentKind::kSpectrum: {
      kind_name = "spectrum";
      const SpectrumResult s = run_spectrum(spec.config, spec.trials, spec.jobs);
      body << "freq_hz,psd_rx_db,psd_rt_db,psd_post_sic_db\n";
      for (int k = 0; k < s.freqs_hz.size(); ++k) {
        body << fmt(s.freqs_hz[k]) << ',' << fmt(s.psd_rx_db[k]) << ','
             << fmt(s.psd_rt_db[k]) << ',' << fmt(s.psd_post_sic_db[k]) << '\n';
      }
      break;
    }
    case ExperimentKind::kNmsdCompare: {
      kind_name = "compare";
      const auto rows =
          run_compare(spec.config, spec.snr_sweep_db, spec.trials, spec.jobs);
      body << "snr_db,nmsd_mmse_db,nmsd_mtls_db,nmsd_mmtls_db\n";
      for (const auto& r : rows) {
        body << fmt(r.snr_db) << ',' << fmt(r.nmsd_mmse_db) << ','
             << fmt(r.nmsd_mtls_db) << ',' << fmt(r.nmsd_mmtls_db) << '\n';
      }
      break;
    }
    case ExperimentKind::kSweep: {
      kind_name = "sweep";
      const auto rows = run_sweep(spec.config, spec.isr_sweep_db,
                                  spec.layer_counts, spec.trials, spec.jobs);
      body << "isr_db";
      for (int layers : spec.layer_counts) {
        body << ",nmsd_mmtls_l" << layers << "_db";
      }
      body << '\n';
      for (const auto& r : rows) {
        body << fmt(r.isr_db);
        for (double v : r.nmsd_by_layers_db) body << ',' << fmt(v);
        body << '\n';
      }
      break;
    }
  }

  write_metadata(out, spec, kind_name);
  out << body.str();
  out.flush();
  if (!out) {
    std::fprintf(stderr, "error: failed writing output '%s'\n",
                 spec.output_path.c_str());
    return 3;
  }
  if (spec.emit_plot_script) {
    write_plot_script(spec.output_path);
  }
  return 0;
}

}  // namespace startls
