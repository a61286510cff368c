// chordrec command-line front end.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chordrec/acoustic.hpp"
#include "chordrec/decoder.hpp"
#include "chordrec/duration.hpp"
#include "chordrec/error.hpp"
#include "chordrec/eval.hpp"
#include "chordrec/features.hpp"
#include "chordrec/language_model.hpp"
#include "chordrec/synth.hpp"
#include "chordrec/timeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chordrec;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kDataEnv = "CHORDREC_DATA";

struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  json inputs = json::object();
};

Run g_run;

std::string fnv1a(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

// Relative input paths that do not exist are looked up under $CHORDREC_DATA.
fs::path input(const std::string& p, bool record = true) {
  fs::path path(p);
  if (path.is_relative() && !fs::exists(path)) {
    if (const char* base = std::getenv(kDataEnv); base && *base && fs::exists(fs::path(base) / path)) {
      path = fs::path(base) / path;
    }
  }
  if (!fs::exists(path)) throw ValidationError("input not found: " + p);
  if (record) {
    g_run.inputs[path.string()] = fs::is_regular_file(path) ? json(fnv1a(path)) : json("directory");
  }
  return path;
}

void write_sidecar(const fs::path& artifact, const json& extra = json::object()) {
  json meta = {{"tool", "chordrec"},
               {"version", kVersion},
               {"command", g_run.command},
               {"argv", g_run.argv},
               {"seed", g_run.seed},
               {"inputs", g_run.inputs},
               {"artifact", artifact.filename().string()},
               {"artifact_hash", fs::exists(artifact) ? fnv1a(artifact) : ""}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  fs::path side = artifact;
  side += ".meta.json";
  std::ofstream out(side);
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + side.string());
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_json_file(const fs::path& p, const json& j, const json& extra = json::object()) {
  ensure_parent(p);
  {
    std::ofstream out(p);
    out << j.dump() << '\n';
    if (!out) throw std::runtime_error("cannot write " + p.string());
  }
  write_sidecar(p, extra);
}

std::vector<std::string> ids_for(const std::string& ids_file, const fs::path& dir, const std::string& suffix) {
  if (!ids_file.empty()) return read_id_list(input(ids_file));
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) {
      ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw ValidationError("no *" + suffix + " files in " + dir.string());
  return ids;
}

// Runs f(i) for i in [0, n) on a pool of workers; the first exception wins.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < std::min(workers, n); ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int default_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::vector<MaybeChord> frame_labels(const SegmentTimeline& lab, double frame_rate, Eigen::Index frames = -1) {
  if (frames < 0) frames = static_cast<Eigen::Index>(std::ceil(lab.end() * frame_rate - 1e-9));
  return lab.sample_frames(static_cast<int>(frames), frame_rate);
}

std::vector<ChangeSequence> flags_from_labs(const fs::path& dir, const std::vector<std::string>& ids, double rate) {
  std::vector<ChangeSequence> out;
  for (const auto& id : ids) out.push_back(change_sequence(frame_labels(read_lab(dir / (id + ".lab")), rate)));
  return out;
}

neural::ClipMode parse_clip(const std::string& s) {
  if (s == "none" || s.empty()) return neural::ClipMode::kNone;
  const auto m = neural::clip_mode_from(s);
  if (m == neural::ClipMode::kNone) throw ParameterError("unknown clip mode '" + s + "'");
  return m;
}

void print_json(const json& j) { std::cout << j.dump(2) << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chord recognition with harmonic language and duration models"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  std::uint64_t seed = 0;
  int threads = default_threads();
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for multi-song commands")->capture_default_str();
  std::function<void()> action;

  // ---------------------------------------------------------------- features
  auto* features = app.add_subcommand("features", "Spectrogram extraction")->require_subcommand(1);
  {
    auto* ex = features->add_subcommand("extract", "WAV -> log filterbank spectrogram CSV");
    static std::string audio, out;
    static FeatureConfig fc;
    ex->add_option("--audio", audio, "PCM WAV file")->required();
    ex->add_option("--out", out, "Output CSV")->required();
    ex->add_option("--log-floor", fc.log_floor, "Output is log(floor + magnitude)")->capture_default_str();
    ex->callback([&] {
      action = [&] {
        const auto spec = log_filterbank_spectrogram(load_audio(input(audio)), fc);
        ensure_parent(out);
        std::ofstream f(out);
        write_spectrogram_csv(f, spec);
        f.close();
        write_sidecar(out, spec.metadata());
        std::cout << spec.frames.rows() << " frames x " << spec.frames.cols() << " bands\n";
      };
    });
  }

  // ---------------------------------------------------------------- acoustic
  auto* acoustic = app.add_subcommand("acoustic", "Frame-wise chord posteriors")->require_subcommand(1);
  {
    auto* tr = acoustic->add_subcommand("train", "Train the logistic-regression stand-in");
    static std::string spec_dir, lab_dir, ids, out;
    static StandinConfig sc;
    tr->add_option("--spec-dir", spec_dir, "Directory of <id>.csv spectrograms")->required();
    tr->add_option("--lab-dir", lab_dir, "Directory of <id>.lab annotations")->required();
    tr->add_option("--ids", ids, "Song id list (default: all spectrograms)");
    tr->add_option("--out", out, "Model JSON")->required();
    tr->add_option("--context", sc.context)->capture_default_str();
    tr->add_option("--epochs", sc.epochs)->capture_default_str();
    tr->add_option("--learning-rate", sc.learning_rate)->capture_default_str();
    tr->add_option("--batch-size", sc.batch_size)->capture_default_str();
    tr->add_option("--beta", sc.calibration.beta, "Target mass on the true class")->capture_default_str();
    tr->callback([&] {
      action = [&] {
        const fs::path sd = input(spec_dir), ld = input(lab_dir);
        const auto list = ids_for(ids, sd, ".csv");
        std::vector<Spectrogram> specs;
        std::vector<std::vector<MaybeChord>> labels;
        for (const auto& id : list) {
          specs.push_back(read_spectrogram_csv(sd / (id + ".csv")));
          labels.push_back(frame_labels(read_lab(ld / (id + ".lab")), specs.back().frame_rate, specs.back().frames.rows()));
        }
        sc.seed = seed;
        const auto r = train_standin(specs, labels, sc);
        write_json_file(out, r.classifier.to_json(),
                        {{"loss_curve", r.loss_curve},
                         {"train_accuracy", standin_accuracy(r.classifier, specs, labels)},
                         {"songs", list.size()}});
      };
    });

    auto* pr = acoustic->add_subcommand("predict", "Spectrogram -> posterior CSV");
    static std::string model, spec, pout;
    static double tau = CalibrationConfig{}.tau;
    pr->add_option("--model", model)->required();
    pr->add_option("--spec", spec, "Spectrogram CSV")->required();
    pr->add_option("--tau", tau, "Softmax temperature")->capture_default_str();
    pr->add_option("--out", pout)->required();
    pr->callback([&] {
      action = [&] {
        const auto c = load_classifier(input(model));
        const auto p = c.predict(read_spectrogram_csv(input(spec)), tau);
        ensure_parent(pout);
        write_posteriors(fs::path(pout), p);
        write_sidecar(pout, {{"tau", tau}, {"frames", p.frames()}});
      };
    });

    auto* im = acoustic->add_subcommand("import", "Validate and normalise external posteriors");
    static std::string in, iout;
    static double rate = 10.0;
    im->add_option("--in", in, "T x 25 CSV")->required();
    im->add_option("--out", iout)->required();
    im->add_option("--frame-rate", rate)->capture_default_str();
    im->callback([&] {
      action = [&] {
        const auto p = load_posteriors(input(in), rate);
        ensure_parent(iout);
        write_posteriors(fs::path(iout), p);
        write_sidecar(iout, {{"frames", p.frames()}, {"frame_rate", rate}});
      };
    });
  }

  // ---------------------------------------------------------------- lm
  auto* lm = app.add_subcommand("lm", "Harmonic language models")->require_subcommand(1);
  {
    auto* ng = lm->add_subcommand("train-ngram", "Lidstone-smoothed n-gram");
    static std::string corpus, out;
    static int order = 2;
    static double alpha = 0.01;
    static bool no_shift = false;
    ng->add_option("--corpus", corpus, "One piece per line")->required();
    ng->add_option("--order", order)->capture_default_str();
    ng->add_option("--alpha", alpha)->capture_default_str();
    ng->add_flag("--no-key-shift", no_shift, "Do not count all 12 transpositions");
    ng->add_option("--out", out)->required();
    ng->callback([&] {
      action = [&] {
        const auto m = train_ngram(read_corpus(input(corpus)), order, alpha, !no_shift);
        write_json_file(out, m.to_json(), {{"order", order}, {"alpha", alpha}, {"key_shift", !no_shift}});
      };
    });

    auto* rn = lm->add_subcommand("train-rnn", "GRU language model");
    static std::string rcorpus, rout;
    static GruLmConfig gc;
    static std::string clip_mode = "none";
    static bool r_no_shift = false, no_crop = false;
    rn->add_option("--corpus", rcorpus)->required();
    rn->add_option("--out", rout)->required();
    rn->add_option("--hidden", gc.hidden)->capture_default_str();
    rn->add_option("--embedding", gc.embedding_dim, "0 = one-hot input")->capture_default_str();
    rn->add_option("--epochs", gc.epochs)->capture_default_str();
    rn->add_option("--batch-size", gc.batch_size)->capture_default_str();
    rn->add_option("--learning-rate", gc.learning_rate)->capture_default_str();
    rn->add_option("--anneal-start", gc.anneal_start_epoch)->capture_default_str();
    rn->add_option("--clip", gc.clip)->capture_default_str();
    rn->add_option("--clip-mode", clip_mode, "none|global_norm|elementwise")->capture_default_str();
    rn->add_flag("--no-key-shift", r_no_shift);
    rn->add_flag("--no-crop", no_crop);
    rn->callback([&] {
      action = [&] {
        gc.clip_mode = parse_clip(clip_mode);
        gc.key_shift = !r_no_shift;
        gc.crop = !no_crop;
        gc.seed = seed;
        const auto m = train_gru_lm(read_corpus(input(rcorpus)), gc);
        write_json_file(rout, m.to_json(), {{"loss_curve", m.loss_curve()}});
      };
    });

    auto* ev = lm->add_subcommand("eval", "Average log-probability of a corpus");
    static std::string model, ecorpus;
    static bool exclude = false;
    ev->add_option("--model", model)->required();
    ev->add_option("--corpus", ecorpus)->required();
    ev->add_flag("--exclude-repeats", exclude, "Renormalise without the current chord");
    ev->callback([&] {
      action = [&] {
        const auto m = load_language_model(input(model));
        const auto c = read_corpus(input(ecorpus));
        std::size_t chords = 0;
        for (const auto& p : c) chords += p.size();
        print_json({{"avg_log_prob", avg_log_prob(*m, c, exclude)}, {"pieces", c.size()}, {"chords", chords}});
      };
    });

    auto* pc = lm->add_subcommand("pca", "2-D PCA of a GRU LM's chord embedding");
    static std::string pmodel, pout;
    pc->add_option("--model", pmodel)->required();
    pc->add_option("--out", pout, "CSV: chord,pc1,pc2")->required();
    pc->callback([&] {
      action = [&] {
        const auto m = load_language_model(input(pmodel));
        const auto* gru = dynamic_cast<const GruLanguageModel*>(m.get());
        if (!gru) throw UnsupportedOperation("pca needs a GRU language model");
        const auto proj = embedding_pca(*gru);
        ensure_parent(pout);
        {
          std::ofstream f(pout);
          f << std::setprecision(10) << "chord,pc1,pc2\n";
          for (int c = 0; c < kNumClasses; ++c) f << to_string(ChordClass(c)) << ',' << proj(c, 0) << ',' << proj(c, 1) << '\n';
        }
        write_sidecar(pout);
      };
    });
  }

  // ---------------------------------------------------------------- duration
  auto* duration = app.add_subcommand("duration", "Chord duration models")->require_subcommand(1);
  {
    static std::string lab_dir, ids;
    static double rate = 10.0;
    auto data_opts = [&](CLI::App* c) {
      c->add_option("--lab-dir", lab_dir, "Directory of <id>.lab annotations")->required();
      c->add_option("--ids", ids, "Song id list (default: all .lab files)");
      c->add_option("--frame-rate", rate)->capture_default_str();
    };
    auto load_flags = [&] {
      const fs::path d = input(lab_dir);
      return flags_from_labs(d, ids_for(ids, d, ".lab"), rate);
    };

    auto* fit = duration->add_subcommand("fit", "Maximum-likelihood parametric fit");
    data_opts(fit);
    static std::string family = "negative_binomial", out;
    fit->add_option("--family", family, "geometric|negative_binomial")->capture_default_str();
    fit->add_option("--out", out)->required();
    fit->callback([&] {
      action = [&] {
        DurationFamily fam;
        if (family == "geometric") {
          fam = DurationFamily::kGeometric;
        } else if (family == "negative_binomial" || family == "negbinomial") {
          fam = DurationFamily::kNegBinomial;
        } else {
          throw ParameterError("unknown duration family '" + family + "'");
        }
        std::vector<int> d;
        for (const auto& f : load_flags())
          for (int x : complete_durations(f)) d.push_back(x);
        const auto m = fit_mle(d, fam);
        write_json_file(out, m->to_json(), {{"segments", d.size()}});
      };
    });

    auto* tr = duration->add_subcommand("train", "GRU hazard model");
    data_opts(tr);
    static std::string tout, clip_mode = "global_norm";
    static GruDurationConfig dc;
    tr->add_option("--out", tout)->required();
    tr->add_option("--hidden", dc.hidden)->capture_default_str();
    tr->add_option("--epochs", dc.epochs)->capture_default_str();
    tr->add_option("--batch-size", dc.batch_size)->capture_default_str();
    tr->add_option("--learning-rate", dc.learning_rate)->capture_default_str();
    tr->add_option("--anneal-start", dc.anneal_start_epoch)->capture_default_str();
    tr->add_option("--clip", dc.clip)->capture_default_str();
    tr->add_option("--clip-mode", clip_mode, "none|global_norm|elementwise")->capture_default_str();
    tr->add_option("--excerpt-length", dc.excerpt_length)->capture_default_str();
    tr->callback([&] {
      action = [&] {
        dc.clip_mode = parse_clip(clip_mode);
        dc.seed = seed;
        const auto m = train_gru_duration(load_flags(), dc);
        write_json_file(tout, m.to_json(), {{"loss_curve", m.loss_curve()}});
      };
    });

    auto* ev = duration->add_subcommand("eval", "Average log-probability per complete segment");
    data_opts(ev);
    static std::string model;
    ev->add_option("--model", model)->required();
    ev->callback([&] {
      action = [&] {
        const auto m = load_duration_model(input(model));
        const auto flags = load_flags();
        print_json({{"avg_log_prob", avg_duration_log_prob(*m, flags)}, {"pieces", flags.size()}});
      };
    });

    auto* trace = duration->add_subcommand("trace", "Hazard trace of one annotated song");
    static std::string tmodel, lab, trout;
    trace->add_option("--model", tmodel)->required();
    trace->add_option("--lab", lab)->required();
    trace->add_option("--frame-rate", rate)->capture_default_str();
    trace->add_option("--out", trout, "CSV: frame,change,hazard")->required();
    trace->callback([&] {
      action = [&] {
        const auto m = load_duration_model(input(tmodel));
        const auto flags = change_sequence(frame_labels(read_lab(input(lab)), rate));
        const auto h = hazard_trace(*m, flags);
        ensure_parent(trout);
        {
          std::ofstream f(trout);
          f << std::setprecision(10) << "frame,change,hazard\n";
          for (std::size_t i = 0; i < flags.size(); ++i) f << i + 1 << ',' << int(flags[i]) << ',' << h[i] << '\n';
        }
        write_sidecar(trout);
      };
    });
  }

  // ---------------------------------------------------------------- decode
  auto* decode = app.add_subcommand("decode", "Posteriors -> chord timeline");
  {
    static std::string post, post_dir, ids, lm_path, dur_path, out, out_dir, alphabet;
    static BeamConfig bc;
    static bool exact = false, no_recombine = false;
    static double rate = 10.0;
    auto* g = decode->add_option_group("input");
    g->add_option("--posteriors", post, "Posterior CSV");
    g->add_option("--posteriors-dir", post_dir, "Directory of <id>.posteriors.csv");
    g->require_option(1);
    decode->add_option("--ids", ids, "Song id list for --posteriors-dir");
    decode->add_option("--lm", lm_path, "Language model JSON")->required();
    decode->add_option("--duration", dur_path, "Duration model JSON")->required();
    decode->add_option("--out", out, "Output .lab (single song)");
    decode->add_option("--out-dir", out_dir, "Output directory (directory mode)");
    decode->add_option("--frame-rate", rate)->capture_default_str();
    decode->add_option("--beam-width", bc.beam_width, "N_b")->capture_default_str();
    decode->add_option("--hash-count", bc.max_per_hash, "N_s: hypotheses per history hash")->capture_default_str();
    decode->add_option("--hash-length", bc.hash_length, "N_h: chords in the history hash")->capture_default_str();
    decode->add_flag("--no-recombine", no_recombine, "Keep equivalent hypotheses separately");
    decode->add_flag("--stats", bc.collect_stats, "Record per-frame beam statistics in the sidecar");
    decode->add_flag("--exact", exact, "Exact Viterbi (n-gram order <= 2, parametric duration)");
    decode->add_option("--alphabet", alphabet, "Comma-separated chord labels to restrict the output");
    decode->callback([&] {
      action = [&] {
        bc.recombine = !no_recombine;
        if (!alphabet.empty()) {
          std::stringstream ss(alphabet);
          for (std::string l; std::getline(ss, l, ',');) {
            const auto c = classify_label(l);
            if (!c) throw ParameterError("alphabet entry '" + l + "' is not a maj/min/N chord");
            bc.alphabet.push_back(*c);
          }
        }
        bc.validate();
        const auto lmodel = load_language_model(input(lm_path));
        const auto dmodel = load_duration_model(input(dur_path));
        auto run_one = [&](const fs::path& in, const fs::path& dst) {
          const auto p = load_posteriors(in, rate);
          const DecodeResult r = exact ? viterbi_exact(p, *lmodel, *dmodel, bc) : beam_decode(p, *lmodel, *dmodel, bc);
          ensure_parent(dst);
          write_lab(dst, r.timeline());
          json extra = {{"log_score", r.log_score},
                        {"decoder", exact ? "viterbi" : "beam"},
                        {"beam", {{"beam_width", bc.beam_width}, {"hash_count", bc.max_per_hash},
                                  {"hash_length", bc.hash_length}, {"recombine", bc.recombine}}}};
          if (r.stats) extra["stats"] = r.stats->to_json();
          write_sidecar(dst, extra);
        };
        if (!post.empty()) {
          if (out.empty()) throw ParameterError("--out is required with --posteriors");
          run_one(input(post), out);
        } else {
          if (out_dir.empty()) throw ParameterError("--out-dir is required with --posteriors-dir");
          const fs::path d = input(post_dir);
          const auto list = ids_for(ids, d, ".posteriors.csv");
          parallel_for(list.size(), threads, [&](std::size_t i) {
            run_one(d / (list[i] + ".posteriors.csv"), fs::path(out_dir) / (list[i] + ".lab"));
          });
          std::cout << "decoded " << list.size() << " songs\n";
        }
      };
    });
  }

  // ---------------------------------------------------------------- evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score estimated timelines against annotations");
  {
    static std::string ref, est, ref_dir, est_dir, ids, out, csv;
    auto* g = evaluate->add_option_group("input");
    g->add_option("--ref", ref, "Reference .lab");
    g->add_option("--ref-dir", ref_dir, "Directory of reference <id>.lab");
    g->require_option(1);
    evaluate->add_option("--est", est, "Estimated .lab");
    evaluate->add_option("--est-dir", est_dir, "Directory of estimated <id>.lab");
    evaluate->add_option("--ids", ids, "Song id list (directory mode)");
    evaluate->add_option("--out", out, "Write the JSON report here as well as to stdout");
    evaluate->add_option("--csv", csv, "Per-song CSV");
    evaluate->callback([&] {
      action = [&] {
        std::vector<SongScore> scores;
        if (!ref.empty()) {
          if (est.empty()) throw ParameterError("--est is required with --ref");
          scores.push_back(score_song(fs::path(ref).stem().string(), read_lab(input(ref)), read_lab(input(est))));
        } else {
          if (est_dir.empty()) throw ParameterError("--est-dir is required with --ref-dir");
          const fs::path rd = input(ref_dir), ed = input(est_dir);
          const auto list = ids_for(ids, rd, ".lab");
          scores.resize(list.size());
          parallel_for(list.size(), threads, [&](std::size_t i) {
            scores[i] = score_song(list[i], read_lab(rd / (list[i] + ".lab")), read_lab(ed / (list[i] + ".lab")));
          });
        }
        const ScoreReport report = corpus_report(std::move(scores));
        const json j = report.to_json();
        print_json(j);
        if (!out.empty()) write_json_file(out, j);
        if (!csv.empty()) {
          ensure_parent(csv);
          {
            std::ofstream f(csv);
            report.write_csv(f);
          }
          write_sidecar(csv);
        }
      };
    });
  }

  // ---------------------------------------------------------------- synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated dataset with noisy posteriors");
  {
    static SynthConfig cfg;
    static std::string out, lm_path, dur_path;
    static std::vector<int> periods;
    synth->add_option("--out", out, "Dataset directory")->required();
    synth->add_option("--songs", cfg.songs)->capture_default_str();
    synth->add_option("--frames", cfg.frames, "Frames per song")->capture_default_str();
    synth->add_option("--noise", cfg.noise, "0 = one-hot posteriors, 1 = uniform")->capture_default_str();
    synth->add_option("--noise-scale", cfg.noise_scale)->capture_default_str();
    synth->add_option("--noise-correlation", cfg.noise_correlation)->capture_default_str();
    synth->add_option("--periods", periods, "Harmonic-rhythm periods in frames");
    synth->add_option("--lm", lm_path, "Sample chords from this language model");
    synth->add_option("--duration", dur_path, "Sample segment lengths from this parametric duration model");
    synth->callback([&] {
      action = [&] {
        cfg.seed = seed;
        if (!periods.empty()) cfg.rhythm.periods = periods;
        std::unique_ptr<LanguageModel> lmodel;
        std::unique_ptr<DurationModel> dmodel;
        if (!lm_path.empty()) lmodel = load_language_model(input(lm_path));
        const ParametricDuration* pd = nullptr;
        if (!dur_path.empty()) {
          dmodel = load_duration_model(input(dur_path));
          pd = dynamic_cast<const ParametricDuration*>(dmodel.get());
          if (!pd) throw UnsupportedOperation("synth samples durations from parametric models only");
        }
        const auto songs = synth_songs(cfg, lmodel.get(), pd);
        const auto split = synth_split(songs, cfg);
        json meta = cfg.to_json();
        meta["argv"] = g_run.argv;
        meta["inputs"] = g_run.inputs;
        meta["counts"] = {{"train", split.train.size()}, {"valid", split.valid.size()}, {"test", split.test.size()}};
        write_synth_dataset(out, songs, split, meta);
        std::cout << "wrote " << songs.size() << " songs to " << out << "\n";
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  g_run.argv.assign(argv, argv + argc);
  g_run.seed = seed;
  for (const auto* sub = app.get_subcommands().front(); sub; sub = sub->get_subcommands().empty() ? nullptr : sub->get_subcommands().front()) {
    g_run.command += (g_run.command.empty() ? "" : " ") + sub->get_name();
  }

  try {
    if (action) action();
    return 0;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const UnsupportedOperation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "invalid data: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "invalid data: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
}
