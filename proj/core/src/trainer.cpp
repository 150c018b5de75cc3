#include "pada/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pada/checkpoint.hpp"
#include "pada/csvfmt.hpp"
#include "pada/errors.hpp"
#include "pada/nn.hpp"

namespace pada {

std::string metrics_csv_header() { return "epoch,step_count,mean_loss,gv,delta,tau,lr"; }

std::string metrics_row_csv(const MetricsRow& row) {
    std::string s;
    s += std::to_string(row.epoch);
    s += ',';
    s += std::to_string(row.step_count);
    s += ',';
    s += format_double(row.mean_loss);
    s += ',';
    s += format_double(row.gv);
    s += ',';
    s += format_double(row.delta);
    s += ',';
    s += format_double(row.tau);
    s += ',';
    s += format_double(row.lr);
    return s;
}

std::string metrics_history_csv(const std::vector<MetricsRow>& history) {
    std::string s = metrics_csv_header();
    s += '\n';
    for (const MetricsRow& r : history) {
        s += metrics_row_csv(r);
        s += '\n';
    }
    return s;
}

std::vector<std::vector<std::size_t>> epoch_data_plan(DataDistribution& dist,
                                                      std::size_t n_samples,
                                                      std::size_t batch_size,
                                                      RngStream& rng) {
    if (batch_size == 0) throw UsageError("epoch_data_plan: batch_size must be positive");
    const std::vector<std::size_t> drawn = sample_epoch_indices(dist, n_samples, rng);
    std::vector<std::vector<std::size_t>> plan;
    for (std::size_t at = 0; at < drawn.size(); at += batch_size) {
        const std::size_t end = std::min(at + batch_size, drawn.size());
        plan.emplace_back(drawn.begin() + static_cast<std::ptrdiff_t>(at),
                          drawn.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return plan;
}

SupernetTrainer::SupernetTrainer(const CellSpec& spec, const TrainConfig& cfg,
                                 const Dataset& train_data)
    : spec_(spec),
      cfg_(cfg),
      train_data_(&train_data),
      path_rng_(cfg.master_seed, "path"),
      data_rng_(cfg.master_seed, "data"),
      run_tracker_(cfg.gv_scope) {
    spec_.validate();
    cfg_.validate();
    if (train_data.n() == 0) throw UsageError("SupernetTrainer: empty training set");
    if (train_data.d_in() != spec.d_in)
        throw ConfigError("SupernetTrainer: dataset width " +
                          std::to_string(train_data.d_in()) + " != space.d_in " +
                          std::to_string(spec.d_in));

    RngStream init_rng(cfg.master_seed, "init");
    net_ = build_supernet(spec_, init_rng);

    opt_.base_lr = cfg.base_lr;
    opt_.min_lr = cfg.min_lr;
    opt_.momentum_coef = cfg.momentum;
    opt_.weight_decay = cfg.weight_decay;

    pdist_ = PathDistribution::uniform(spec_);
    pdist_.update_freq = cfg.pa.update_freq;
    pdist_.style = cfg.pa.style;
    pdist_.reweight = cfg.pa.reweight;

    ddist_ = DataDistribution::uniform(train_data.n(), train_data.labels,
                                       spec_.n_classes);
    ddist_.style = cfg.da.style;
    ddist_.granularity = cfg.da.granularity;
}

SupernetTrainer::SupernetTrainer(ResumeTag, const CellSpec& spec,
                                 const TrainConfig& cfg, const Dataset& train_data)
    : spec_(spec),
      cfg_(cfg),
      train_data_(&train_data),
      run_tracker_(cfg.gv_scope) {}

void SupernetTrainer::run_epoch() {
    if (epochs_done_ >= cfg_.epochs)
        throw UsageError("run_epoch: all " + std::to_string(cfg_.epochs) +
                         " epochs already done");
    const std::size_t epoch = epochs_done_;
    const std::size_t n = train_data_->n();
    const double lr = cosine_lr(epoch, cfg_.epochs, cfg_.base_lr, cfg_.min_lr);

    // data plan: importance draws with replacement under DA, a plain
    // shuffled pass otherwise
    std::vector<std::vector<std::size_t>> plan;
    if (cfg_.da.enabled) {
        plan = epoch_data_plan(ddist_, n, cfg_.batch_size, data_rng_);
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        data_rng_.shuffle(order);
        for (std::size_t at = 0; at < n; at += cfg_.batch_size) {
            const std::size_t end = std::min(at + cfg_.batch_size, n);
            plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
        }
    }

    GradVarTracker epoch_tracker(cfg_.gv_scope);
    double loss_sum = 0.0;
    const double in_force_delta = cfg_.pa.enabled ? pdist_.delta : 0.0;
    const double in_force_tau = cfg_.da.enabled ? ddist_.tau : 0.0;

    for (const auto& idx : plan) {
        const SampledPath sampled = sample_path(pdist_, path_rng_);
        const Batch batch = make_batch(*train_data_, idx);

        BackwardResult bwd;
        try {
            auto fwd = forward(net_.params, spec_, sampled.path, batch);
            bwd = backward(net_.params, spec_, sampled.path, batch, fwd.cache);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " [epoch " +
                               std::to_string(epoch) + ", step " +
                               std::to_string(opt_.step_count) + ", path " +
                               sampled.path.to_string() + ", first sample id " +
                               std::to_string(batch.sample_ids.front()) + "]");
        }
        if (!std::isfinite(bwd.loss))
            throw NumericError("training loss is non-finite at epoch " +
                               std::to_string(epoch) + ", step " +
                               std::to_string(opt_.step_count) + ", path " +
                               sampled.path.to_string() + ", first sample id " +
                               std::to_string(batch.sample_ids.front()));

        double loss = bwd.loss;
        if (cfg_.pa.enabled && cfg_.pa.reweight) {
            const double factor = reweight_factor(pdist_, sampled.path);
            for (auto& [name, g] : bwd.grads)
                for (double& v : g.data) v *= factor;
            loss *= factor;
        }

        sgd_step(net_.params, bwd.grads, opt_, lr);
        epoch_tracker.record(bwd.grads);
        run_tracker_.record(bwd.grads);

        if (cfg_.pa.enabled) {
            accumulate_path_norms(pdist_, spec_, sampled.path, bwd.grads);
            if (cfg_.pa.update_freq == UpdateFreq::PerStep)
                refresh_path_distribution_from_accum(pdist_);
        }
        if (cfg_.da.enabled)
            accumulate_data_norms(ddist_, batch,
                                  per_sample_importance(bwd.last_layer_grad));

        loss_sum += loss;
    }

    // epoch end: advance the schedules, then republish p, then q
    const std::size_t sched_epoch = epoch + 1;  // schedule() is 1-based
    if (cfg_.pa.enabled) {
        if (cfg_.pa.update_freq == UpdateFreq::PerEpoch) {
            update_path_distribution(pdist_, sched_epoch, cfg_.epochs);
        } else {
            // per-step mode keeps running accumulators; only the
            // smoothing coefficient moves at epoch boundaries
            pdist_.delta = schedule(sched_epoch, cfg_.epochs, pdist_.style);
            refresh_path_distribution_from_accum(pdist_);
        }
    }
    if (cfg_.da.enabled) update_data_distribution(ddist_, sched_epoch, cfg_.epochs);

    MetricsRow row;
    row.epoch = epoch;
    row.step_count = opt_.step_count;
    row.mean_loss = loss_sum / static_cast<double>(plan.size());
    row.gv = epoch_tracker.has_eligible() ? epoch_tracker.supernet_gv() : 0.0;
    row.delta = in_force_delta;
    row.tau = in_force_tau;
    row.lr = lr;
    history_.push_back(row);

    ++epochs_done_;
    ++opt_.epoch_count;
}

void SupernetTrainer::run_to_end() {
    while (epochs_done_ < cfg_.epochs) run_epoch();
}

namespace {

Tensor scalar_tensor(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
}

Tensor vector_tensor(const std::vector<double>& v) {
    Tensor t({v.size()});
    t.data = v;
    return t;
}

Tensor rng_state_tensor(const RngStream& rng) {
    Tensor t({4});
    const auto s = rng.state();
    for (std::size_t i = 0; i < 4; ++i) t.data[i] = u64_as_f64(s[i]);
    return t;
}

std::array<std::uint64_t, 4> tensor_rng_state(const Tensor& t, const std::string& name) {
    if (t.numel() != 4) throw IoError("checkpoint entry " + name + " must hold 4 words");
    std::array<std::uint64_t, 4> s{};
    for (std::size_t i = 0; i < 4; ++i) s[i] = f64_as_u64(t.data[i]);
    return s;
}

}  // namespace

void SupernetTrainer::save_checkpoint(const std::string& path) const {
    std::map<std::string, Tensor> e;
    for (const auto& [name, t] : net_.params) e["param." + name] = t;
    for (const auto& [name, t] : opt_.momentum) e["opt.momentum." + name] = t;
    e["opt.scalars"] = vector_tensor({opt_.base_lr, opt_.min_lr, opt_.momentum_coef,
                                      opt_.weight_decay,
                                      static_cast<double>(opt_.step_count),
                                      static_cast<double>(opt_.epoch_count)});

    const std::size_t E = spec_.n_edges(), K = spec_.n_ops();
    Tensor pprobs({E, K}), paccum({E, K});
    for (std::size_t i = 0; i < E; ++i)
        for (std::size_t k = 0; k < K; ++k) {
            pprobs.data[i * K + k] = pdist_.probs[i][k];
            paccum.data[i * K + k] = pdist_.accum[i][k];
        }
    e["pathdist.probs"] = std::move(pprobs);
    e["pathdist.accum"] = std::move(paccum);
    e["pathdist.delta"] = scalar_tensor(pdist_.delta);
    e["pathdist.flags"] = vector_tensor(
        {pdist_.update_freq == UpdateFreq::PerStep ? 1.0 : 0.0,
         pdist_.style == ScheduleStyle::Decrease ? 1.0 : 0.0,
         pdist_.reweight ? 1.0 : 0.0});

    e["datadist.probs"] = vector_tensor(ddist_.probs);
    e["datadist.accum"] = vector_tensor(ddist_.accum);
    Tensor sampled({ddist_.sampled.size()});
    for (std::size_t i = 0; i < ddist_.sampled.size(); ++i)
        sampled.data[i] = ddist_.sampled[i] ? 1.0 : 0.0;
    e["datadist.sampled"] = std::move(sampled);
    e["datadist.tau"] = scalar_tensor(ddist_.tau);
    e["datadist.flags"] = vector_tensor(
        {ddist_.style == ScheduleStyle::Decrease ? 1.0 : 0.0,
         ddist_.granularity == Granularity::Class ? 1.0 : 0.0});
    Tensor class_of({ddist_.class_of.size()});
    for (std::size_t i = 0; i < ddist_.class_of.size(); ++i)
        class_of.data[i] = static_cast<double>(ddist_.class_of[i]);
    e["datadist.class_of"] = std::move(class_of);
    e["datadist.n_classes"] = scalar_tensor(static_cast<double>(ddist_.n_classes));

    e["rng.path.state"] = rng_state_tensor(path_rng_);
    e["rng.data.state"] = rng_state_tensor(data_rng_);

    for (const auto& [name, m] : run_tracker_.moments()) {
        e["gvrun." + name + ".count"] = scalar_tensor(static_cast<double>(m.s));
        e["gvrun." + name + ".mean"] = vector_tensor(m.mean);
        e["gvrun." + name + ".m2"] = vector_tensor(m.m2);
    }

    e["meta.epochs_done"] = scalar_tensor(static_cast<double>(epochs_done_));
    e["meta.total_epochs"] = scalar_tensor(static_cast<double>(cfg_.epochs));
    e["meta.master_seed"] = scalar_tensor(u64_as_f64(cfg_.master_seed));
    e["meta.dataset_fingerprint"] = scalar_tensor(u64_as_f64(train_data_->fingerprint()));
    e["meta.gv_scope"] =
        scalar_tensor(cfg_.gv_scope == GvScope::All ? 1.0 : 0.0);

    save_checkpoint_file(path, e);
}

SupernetTrainer SupernetTrainer::resume_from_checkpoint(const std::string& path,
                                                        const CellSpec& spec,
                                                        const TrainConfig& cfg,
                                                        const Dataset& train_data) {
    std::map<std::string, Tensor> e = load_checkpoint_file(path);
    auto take = [&](const std::string& name) -> Tensor {
        auto it = e.find(name);
        if (it == e.end())
            throw IoError(path + ": checkpoint missing entry '" + name + "'");
        Tensor t = std::move(it->second);
        e.erase(it);
        return t;
    };

    // refuse to resume into a different experiment
    const std::uint64_t ck_seed = f64_as_u64(take("meta.master_seed").data[0]);
    if (ck_seed != cfg.master_seed)
        throw ConfigError("checkpoint was written with master_seed " +
                          std::to_string(ck_seed) + ", config says " +
                          std::to_string(cfg.master_seed));
    const double ck_total = take("meta.total_epochs").data[0];
    if (ck_total != static_cast<double>(cfg.epochs))
        throw ConfigError("checkpoint expects " + std::to_string(ck_total) +
                          " total epochs, config says " + std::to_string(cfg.epochs));
    const std::uint64_t ck_fp = f64_as_u64(take("meta.dataset_fingerprint").data[0]);
    if (ck_fp != train_data.fingerprint())
        throw ConfigError("checkpoint was written against a different dataset "
                          "(fingerprint mismatch)");
    const double ck_scope = take("meta.gv_scope").data[0];
    if ((ck_scope != 0.0) != (cfg.gv_scope == GvScope::All))
        throw ConfigError("checkpoint gv scope disagrees with config");

    SupernetTrainer tr(ResumeTag{}, spec, cfg, train_data);
    tr.spec_.validate();
    tr.cfg_.validate();

    // supernet params: names and shapes must match the spec exactly
    {
        RngStream throwaway(0, "shape-template");
        Supernet tmpl = build_supernet(spec, throwaway);
        tr.net_.spec = spec;
        for (auto& [name, t] : tmpl.params) {
            Tensor loaded = take("param." + name);
            if (loaded.shape != t.shape)
                throw IoError(path + ": entry param." + name + " has wrong shape");
            tr.net_.params[name] = std::move(loaded);
        }
    }

    tr.opt_.base_lr = cfg.base_lr;
    tr.opt_.min_lr = cfg.min_lr;
    tr.opt_.momentum_coef = cfg.momentum;
    tr.opt_.weight_decay = cfg.weight_decay;
    {
        const Tensor scal = take("opt.scalars");
        if (scal.numel() != 6) throw IoError(path + ": opt.scalars must hold 6 values");
        if (scal.data[0] != cfg.base_lr || scal.data[1] != cfg.min_lr ||
            scal.data[2] != cfg.momentum || scal.data[3] != cfg.weight_decay)
            throw ConfigError("checkpoint optimizer hyperparameters disagree with config");
        tr.opt_.step_count = static_cast<std::size_t>(scal.data[4]);
        tr.opt_.epoch_count = static_cast<std::size_t>(scal.data[5]);
    }

    tr.pdist_ = PathDistribution::uniform(spec);
    tr.pdist_.update_freq = cfg.pa.update_freq;
    tr.pdist_.style = cfg.pa.style;
    tr.pdist_.reweight = cfg.pa.reweight;
    {
        const std::size_t E = spec.n_edges(), K = spec.n_ops();
        const Tensor probs = take("pathdist.probs");
        const Tensor accum = take("pathdist.accum");
        if (probs.shape != std::vector<std::size_t>{E, K} || accum.shape != probs.shape)
            throw IoError(path + ": pathdist tensors have wrong shape");
        for (std::size_t i = 0; i < E; ++i)
            for (std::size_t k = 0; k < K; ++k) {
                tr.pdist_.probs[i][k] = probs.data[i * K + k];
                tr.pdist_.accum[i][k] = accum.data[i * K + k];
            }
        tr.pdist_.delta = take("pathdist.delta").data[0];
        const Tensor flags = take("pathdist.flags");
        if (flags.numel() != 3) throw IoError(path + ": pathdist.flags must hold 3 values");
        const bool ck_per_step = flags.data[0] != 0.0;
        const bool ck_decrease = flags.data[1] != 0.0;
        const bool ck_reweight = flags.data[2] != 0.0;
        if (ck_per_step != (cfg.pa.update_freq == UpdateFreq::PerStep) ||
            ck_decrease != (cfg.pa.style == ScheduleStyle::Decrease) ||
            ck_reweight != cfg.pa.reweight)
            throw ConfigError("checkpoint path-distribution flags disagree with config");
        tr.pdist_.validate();
    }

    tr.ddist_ = DataDistribution::uniform(train_data.n(), train_data.labels,
                                          spec.n_classes);
    tr.ddist_.style = cfg.da.style;
    tr.ddist_.granularity = cfg.da.granularity;
    {
        const std::size_t n = train_data.n();
        Tensor probs = take("datadist.probs");
        Tensor accum = take("datadist.accum");
        Tensor sampled = take("datadist.sampled");
        Tensor class_of = take("datadist.class_of");
        if (probs.numel() != n || accum.numel() != n || sampled.numel() != n ||
            class_of.numel() != n)
            throw IoError(path + ": datadist tensors have wrong length");
        tr.ddist_.probs = std::move(probs.data);
        tr.ddist_.accum = std::move(accum.data);
        for (std::size_t i = 0; i < n; ++i) {
            tr.ddist_.sampled[i] = sampled.data[i] != 0.0;
            if (static_cast<double>(tr.ddist_.class_of[i]) != class_of.data[i])
                throw ConfigError("checkpoint data-distribution classes disagree "
                                  "with the dataset");
        }
        tr.ddist_.tau = take("datadist.tau").data[0];
        const Tensor flags = take("datadist.flags");
        if (flags.numel() != 2) throw IoError(path + ": datadist.flags must hold 2 values");
        if ((flags.data[0] != 0.0) != (cfg.da.style == ScheduleStyle::Decrease) ||
            (flags.data[1] != 0.0) != (cfg.da.granularity == Granularity::Class))
            throw ConfigError("checkpoint data-distribution flags disagree with config");
        if (take("datadist.n_classes").data[0] != static_cast<double>(spec.n_classes))
            throw ConfigError("checkpoint n_classes disagrees with the space");
        tr.ddist_.validate();
    }

    tr.path_rng_.set_state(tensor_rng_state(take("rng.path.state"), "rng.path.state"));
    tr.data_rng_.set_state(tensor_rng_state(take("rng.data.state"), "rng.data.state"));

    tr.epochs_done_ = static_cast<std::size_t>(take("meta.epochs_done").data[0]);

    // whole-run gradient-variance moments
    {
        std::map<std::string, GradVarTracker::Moments> moments;
        std::vector<std::string> gv_names;
        for (const auto& [name, t] : e)
            if (name.rfind("gvrun.", 0) == 0 && name.size() > 6 &&
                name.substr(name.size() - 6) == ".count")
                gv_names.push_back(name.substr(6, name.size() - 6 - 6));
        for (const std::string& pname : gv_names) {
            GradVarTracker::Moments m;
            m.s = static_cast<std::size_t>(take("gvrun." + pname + ".count").data[0]);
            m.mean = take("gvrun." + pname + ".mean").data;
            m.m2 = take("gvrun." + pname + ".m2").data;
            if (m.mean.size() != m.m2.size())
                throw IoError(path + ": gvrun moments for '" + pname +
                              "' have inconsistent sizes");
            moments[pname] = std::move(m);
        }
        tr.run_tracker_.restore(std::move(moments));
    }

    // opt momentum buffers are whatever params have been stepped so far
    std::vector<std::string> mom_names;
    for (const auto& [name, t] : e)
        if (name.rfind("opt.momentum.", 0) == 0) mom_names.push_back(name.substr(13));
    for (const std::string& name : mom_names) {
        Tensor t = take("opt.momentum." + name);
        auto wit = tr.net_.params.find(name);
        if (wit == tr.net_.params.end() || wit->second.shape != t.shape)
            throw IoError(path + ": momentum buffer '" + name +
                          "' does not match any parameter");
        tr.opt_.momentum[name] = std::move(t);
    }

    if (!e.empty())
        throw IoError(path + ": unrecognized checkpoint entry '" + e.begin()->first + "'");
    return tr;
}

TrainOutcome train_supernet(const CellSpec& spec, const TrainConfig& cfg,
                            const Dataset& train_data) {
    SupernetTrainer tr(spec, cfg, train_data);
    tr.run_to_end();
    return TrainOutcome{tr.net(), tr.history()};
}

}  // namespace pada
