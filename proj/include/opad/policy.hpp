#pragma once

#include <algorithm>
#include <deque>
#include <utility>
#include <vector>

#include "opad/state_encoder.hpp"

namespace opad {

enum class TargetStyle : std::uint32_t { Double = 0, Vanilla = 1 };

struct PolicyConfig {
    int hidden = 64;
    double lr = 0.001;
    double momentum = 0.95;
    double lr_decay = 0.998;  // multiplies the learning rate after each optimize step
    double gamma = 0.9;
    int batch_size = 8;
    int sync_every = 10;  // optimize steps between target-network syncs
    TargetStyle target_style = TargetStyle::Double;
};

// One cycle's experience: the state, the chosen candidate row per mini-batch,
// the shared scalar reward, and the freshly sampled next state.
struct Transition {
    StateRepr s_t;
    StateRepr s_next;
    std::vector<int> actions;  // row index into s_t.c_rows, one per mini-batch
    double reward = 0.0;
    bool terminal = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 1000) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return storage_.size(); }
    bool empty() const { return storage_.empty(); }
    const Transition& at(std::size_t i) const { return storage_.at(i); }

    void push(Transition t) {
        if (storage_.size() == capacity_) storage_.pop_front();
        storage_.push_back(std::move(t));
    }

    // Flags the most recent transition as terminal; used when an episode is
    // cut short after the fact (budget or pool exhaustion).
    void mark_last_terminal() {
        if (!storage_.empty()) storage_.back().terminal = true;
    }

    // min(k, size) distinct transitions, uniform without replacement
    std::vector<const Transition*> sample(std::size_t k, Rng& rng) const {
        std::vector<int> idx(storage_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        auto picked = rng.sample_without_replacement(std::move(idx), std::min(k, storage_.size()));
        std::vector<const Transition*> out;
        out.reserve(picked.size());
        for (int i : picked) out.push_back(&storage_[static_cast<std::size_t>(i)]);
        return out;
    }

private:
    std::size_t capacity_;
    std::deque<Transition> storage_;
};

struct EpsilonSchedule {
    enum class Mode : std::uint32_t { Multiplicative = 0, Subtractive = 1 };

    double eps0 = 0.9;
    double factor = 0.1;
    Mode mode = Mode::Multiplicative;

    // exploration rate at a given training cycle; deployment always uses 0
    double value(int cycle) const {
        if (cycle < 0) throw IntegrityError("epsilon schedule: negative cycle");
        if (mode == Mode::Multiplicative) {
            double e = eps0;
            for (int c = 0; c < cycle; ++c) e *= factor;
            return e;
        }
        return std::max(0.0, eps0 - factor * static_cast<double>(cycle));
    }
};

// The acquisition policy Π: a shared per-row encoder applied to candidate and
// state-set embeddings, mean pooling over the state rows, and a scalar head
// on [φ(c) ; φ(c)⊙s̄ ; φ(c)·s̄]. The state-set rows are summed in
// lexicographic order of their encodings, which makes the Q-values bit-exact
// invariant to permutations of the state set.
class PolicyNet {
public:
    PolicyNet() = default;

    PolicyNet(int input_dim, PolicyConfig config, Rng& rng) : config_(config) {
        const int h = config.hidden;
        if (h < 1) throw ConfigError("policy hidden width must be positive");
        encoder_ = DenseNet({{input_dim, h, Act::ReLU}, {h, h, Act::Identity}}, rng);
        head_ = DenseNet({{2 * h + 1, h, Act::ReLU}, {h, 1, Act::Identity}}, rng);
        head_.zero_last_layer();  // fresh policy scores every action 0
        lr_current_ = config.lr;
    }

    const PolicyConfig& config() const { return config_; }
    double current_lr() const { return lr_current_; }
    long long optimize_steps() const { return optimize_steps_; }
    int input_dim() const { return encoder_.input_dim(); }

    Vec q_values(const StateRepr& s) const {
        s.check();
        const Vec s_bar = state_mean(s.s_rows);
        Vec q(s.c_rows.size());
        for (std::size_t i = 0; i < s.c_rows.size(); ++i) {
            const Vec phi = encoder_.forward(s.c_rows[i]);
            q[i] = head_.forward(head_input(phi, s_bar))[0];
        }
        return q;
    }

    // One row index per mini-batch: ε-uniform, otherwise argmax Q within the
    // mini-batch with ties to the lowest row index.
    std::vector<int> select_actions(const StateRepr& s, double epsilon, Rng& rng) const {
        const Vec q = q_values(s);
        std::vector<int> actions;
        actions.reserve(static_cast<std::size_t>(s.n_batches()));
        for (int b = 0; b < s.n_batches(); ++b) {
            const int* block = s.partition.data() + static_cast<std::size_t>(b) * static_cast<std::size_t>(s.n_pool);
            if (epsilon > 0.0 && rng.uniform_real() < epsilon) {
                actions.push_back(block[rng.uniform_int(static_cast<std::uint64_t>(s.n_pool))]);
                continue;
            }
            int best = block[0];
            for (int j = 1; j < s.n_pool; ++j) {
                const int row = block[j];
                const double qr = q[static_cast<std::size_t>(row)];
                const double qb = q[static_cast<std::size_t>(best)];
                if (qr > qb || (qr == qb && row < best)) best = row;
            }
            actions.push_back(best);
        }
        return actions;
    }

    // One SGD step on a uniform replay mini-batch with the double-DQN target
    // y_i = R + γ·Q_target(S', a*_i), a*_i chosen by the online network
    // (target network under TargetStyle::Vanilla). Returns the TD loss.
    double optimize_step(const PolicyNet& target, const ReplayBuffer& buffer, Rng& rng) {
        if (buffer.empty()) throw IntegrityError("optimize_step: empty replay buffer");
        const auto batch = buffer.sample(static_cast<std::size_t>(config_.batch_size), rng);

        std::size_t n_terms = 0;
        for (const Transition* t : batch) n_terms += t->actions.size();

        Vec enc_grads = encoder_.zero_grads();
        Vec head_grads = head_.zero_grads();
        double loss = 0.0;

        for (const Transition* t : batch) {
            std::vector<double> targets = td_targets(*t, target);
            loss += backprop_transition(*t, targets, n_terms, enc_grads, head_grads);
        }

        encoder_.sgd_momentum(enc_grads, lr_current_, config_.momentum);
        head_.sgd_momentum(head_grads, lr_current_, config_.momentum);
        lr_current_ *= config_.lr_decay;
        ++optimize_steps_;
        return loss;
    }

    void sync_from(const PolicyNet& online) {
        encoder_.load(online.encoder_.flatten());
        head_.load(online.head_.flatten());
    }

    std::size_t n_params() const { return encoder_.n_params() + head_.n_params(); }

    Vec flatten() const {
        Vec flat = encoder_.flatten();
        const Vec h = head_.flatten();
        flat.insert(flat.end(), h.begin(), h.end());
        return flat;
    }

    void load(const Vec& flat) {
        if (flat.size() != n_params()) throw IntegrityError("PolicyNet: bad parameter count");
        encoder_.load(Vec(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(encoder_.n_params())));
        head_.load(Vec(flat.begin() + static_cast<std::ptrdiff_t>(encoder_.n_params()), flat.end()));
    }

    // Q of one candidate row together with d Q / d params (flatten() layout);
    // the finite-difference tests probe the full encoder/pool/head chain.
    std::pair<double, Vec> q_with_grad(const StateRepr& s, int row) const {
        s.check();
        Vec enc_grads = encoder_.zero_grads();
        Vec head_grads = head_.zero_grads();

        std::vector<DenseNet::Tape> s_tapes(s.s_rows.size());
        std::vector<Vec> s_phi(s.s_rows.size());
        for (std::size_t i = 0; i < s.s_rows.size(); ++i)
            s_phi[i] = encoder_.forward(s.s_rows[i], s_tapes[i]);
        const Vec s_bar = sorted_mean(s_phi);

        DenseNet::Tape c_tape, h_tape;
        const Vec phi = encoder_.forward(s.c_rows[static_cast<std::size_t>(row)], c_tape);
        const Vec h_in = head_input(phi, s_bar);
        const double q = head_.forward(h_in, h_tape)[0];

        Vec d_sbar(s_bar.size(), 0.0);
        backward_action(1.0, phi, s_bar, c_tape, h_tape, enc_grads, head_grads, d_sbar);
        const double inv = 1.0 / static_cast<double>(s.s_rows.size());
        Vec d_row(d_sbar.size());
        for (std::size_t i = 0; i < d_row.size(); ++i) d_row[i] = d_sbar[i] * inv;
        for (std::size_t i = 0; i < s_tapes.size(); ++i)
            encoder_.backward(s_tapes[i], d_row, enc_grads);

        Vec grad = std::move(enc_grads);
        grad.insert(grad.end(), head_grads.begin(), head_grads.end());
        return {q, std::move(grad)};
    }

    void write(BinWriter& w) const {
        w.u32(static_cast<std::uint32_t>(config_.hidden));
        w.f64(config_.lr);
        w.f64(config_.momentum);
        w.f64(config_.lr_decay);
        w.f64(config_.gamma);
        w.u32(static_cast<std::uint32_t>(config_.batch_size));
        w.u32(static_cast<std::uint32_t>(config_.sync_every));
        w.u32(static_cast<std::uint32_t>(config_.target_style));
        w.f64(lr_current_);
        w.i64(optimize_steps_);
        encoder_.write(w);
        head_.write(w);
    }

    static PolicyNet read(BinReader& r) {
        PolicyNet p;
        p.config_.hidden = static_cast<int>(r.u32());
        p.config_.lr = r.f64();
        p.config_.momentum = r.f64();
        p.config_.lr_decay = r.f64();
        p.config_.gamma = r.f64();
        p.config_.batch_size = static_cast<int>(r.u32());
        p.config_.sync_every = static_cast<int>(r.u32());
        p.config_.target_style = static_cast<TargetStyle>(r.u32());
        p.lr_current_ = r.f64();
        p.optimize_steps_ = r.i64();
        p.encoder_ = DenseNet::read(r);
        p.head_ = DenseNet::read(r);
        return p;
    }

private:
    static Vec head_input(const Vec& phi, const Vec& s_bar) {
        const std::size_t h = phi.size();
        Vec in(2 * h + 1);
        double dot = 0.0;
        for (std::size_t i = 0; i < h; ++i) {
            in[i] = phi[i];
            in[h + i] = phi[i] * s_bar[i];
            dot += phi[i] * s_bar[i];
        }
        in[2 * h] = dot;
        return in;
    }

    // Mean of the rows, summed in lexicographic row order so the result is
    // identical for any permutation of the input rows.
    static Vec sorted_mean(const std::vector<Vec>& rows) {
        std::vector<const Vec*> order;
        order.reserve(rows.size());
        for (const Vec& r : rows) order.push_back(&r);
        std::sort(order.begin(), order.end(), [](const Vec* a, const Vec* b) {
            return std::lexicographical_compare(a->begin(), a->end(), b->begin(), b->end());
        });
        Vec mean(rows.front().size(), 0.0);
        for (const Vec* r : order)
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (*r)[i];
        const double inv = 1.0 / static_cast<double>(rows.size());
        for (double& x : mean) x *= inv;
        return mean;
    }

    Vec state_mean(const std::vector<Vec>& s_rows) const {
        std::vector<Vec> phi(s_rows.size());
        for (std::size_t i = 0; i < s_rows.size(); ++i) phi[i] = encoder_.forward(s_rows[i]);
        return sorted_mean(phi);
    }

    // TD target per sub-action of one transition.
    std::vector<double> td_targets(const Transition& t, const PolicyNet& target) const {
        std::vector<double> y(t.actions.size(), t.reward);
        if (t.terminal) return y;
        if (static_cast<int>(t.actions.size()) != t.s_next.n_batches())
            throw IntegrityError("transition: action count != next-state mini-batches");

        const Vec q_select = config_.target_style == TargetStyle::Double
                                 ? q_values(t.s_next)
                                 : target.q_values(t.s_next);
        const Vec s_bar_t = target.state_mean(t.s_next.s_rows);
        for (std::size_t b = 0; b < t.actions.size(); ++b) {
            const int* block = t.s_next.partition.data() +
                               b * static_cast<std::size_t>(t.s_next.n_pool);
            int best = block[0];
            for (int j = 1; j < t.s_next.n_pool; ++j) {
                const int row = block[j];
                if (q_select[static_cast<std::size_t>(row)] > q_select[static_cast<std::size_t>(best)] ||
                    (q_select[static_cast<std::size_t>(row)] == q_select[static_cast<std::size_t>(best)] &&
                     row < best))
                    best = row;
            }
            const Vec phi_t =
                target.encoder_.forward(t.s_next.c_rows[static_cast<std::size_t>(best)]);
            const double q_eval = target.head_.forward(head_input(phi_t, s_bar_t))[0];
            y[b] += config_.gamma * q_eval;
        }
        return y;
    }

    // Squared-error terms for one transition's sub-actions; gradients are
    // scaled by 1/n_terms so the batch loss is a mean over (transition, i).
    double backprop_transition(const Transition& t, const std::vector<double>& targets,
                               std::size_t n_terms, Vec& enc_grads, Vec& head_grads) {
        std::vector<DenseNet::Tape> s_tapes(t.s_t.s_rows.size());
        std::vector<Vec> s_phi(t.s_t.s_rows.size());
        for (std::size_t i = 0; i < t.s_t.s_rows.size(); ++i)
            s_phi[i] = encoder_.forward(t.s_t.s_rows[i], s_tapes[i]);
        const Vec s_bar = sorted_mean(s_phi);

        Vec d_sbar(s_bar.size(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < t.actions.size(); ++i) {
            DenseNet::Tape c_tape, h_tape;
            const int row = t.actions[i];
            const Vec phi = encoder_.forward(t.s_t.c_rows[static_cast<std::size_t>(row)], c_tape);
            const Vec h_in = head_input(phi, s_bar);
            const double q = head_.forward(h_in, h_tape)[0];
            const double err = q - targets[i];
            loss += err * err / static_cast<double>(n_terms);
            const double dq = 2.0 * err / static_cast<double>(n_terms);
            backward_action(dq, phi, s_bar, c_tape, h_tape, enc_grads, head_grads, d_sbar);
        }

        const double inv = 1.0 / static_cast<double>(t.s_t.s_rows.size());
        Vec d_row(d_sbar.size());
        for (std::size_t i = 0; i < d_row.size(); ++i) d_row[i] = d_sbar[i] * inv;
        bool any = false;
        for (double x : d_row)
            if (x != 0.0) any = true;
        if (any)
            for (std::size_t i = 0; i < s_tapes.size(); ++i)
                encoder_.backward(s_tapes[i], d_row, enc_grads);
        return loss;
    }

    // Chain rule through the head and the [φ ; φ⊙s̄ ; φ·s̄] assembly for one
    // action; accumulates into the parameter grads and the shared d s̄.
    void backward_action(double dq, const Vec& phi, const Vec& s_bar,
                         const DenseNet::Tape& c_tape, const DenseNet::Tape& h_tape,
                         Vec& enc_grads, Vec& head_grads, Vec& d_sbar) const {
        const std::size_t h = phi.size();
        Vec d_hin = head_.backward(h_tape, Vec{dq}, head_grads);

        Vec d_phi(h, 0.0);
        for (std::size_t i = 0; i < h; ++i) {
            d_phi[i] += d_hin[i];
            d_phi[i] += d_hin[h + i] * s_bar[i];
            d_sbar[i] += d_hin[h + i] * phi[i];
            d_phi[i] += d_hin[2 * h] * s_bar[i];
            d_sbar[i] += d_hin[2 * h] * phi[i];
        }
        encoder_.backward(c_tape, d_phi, enc_grads);
    }

    PolicyConfig config_;
    DenseNet encoder_, head_;
    double lr_current_ = 0.001;
    long long optimize_steps_ = 0;
};

// Hard-copies the online parameters into the target every N optimize steps.
inline void sync_target(const PolicyNet& policy, PolicyNet& target, int every_n_updates) {
    if (every_n_updates < 1) throw ConfigError("sync interval must be positive");
    if (policy.optimize_steps() % every_n_updates == 0) target.sync_from(policy);
}

// Everything deployment needs to reproduce training-time encoding: the
// trained network, the ε schedule, the state set, and the top-K used by the
// sample encoder.
struct PolicyCheckpoint {
    PolicyNet policy;
    EpsilonSchedule schedule;
    std::vector<int> x_state_ids;
    int top_k = 10;
    TaskKind task = TaskKind::Detection;

    void save(const std::string& path) const {
        BinWriter w;
        static constexpr char magic[8] = {'O', 'P', 'A', 'D', 'C', 'K', '1', '\0'};
        w.raw(magic, 8);
        w.u32(static_cast<std::uint32_t>(task));
        w.u32(static_cast<std::uint32_t>(top_k));
        w.f64(schedule.eps0);
        w.f64(schedule.factor);
        w.u32(static_cast<std::uint32_t>(schedule.mode));
        w.ids(x_state_ids);
        policy.write(w);
        w.write_file(path);
    }

    static PolicyCheckpoint load(const std::string& path) {
        BinReader r = BinReader::from_file(path);
        char magic[8];
        r.raw(magic, 8);
        static constexpr char want[8] = {'O', 'P', 'A', 'D', 'C', 'K', '1', '\0'};
        if (std::memcmp(magic, want, 8) != 0) throw IoError("not a policy checkpoint");
        PolicyCheckpoint ck;
        ck.task = static_cast<TaskKind>(r.u32());
        ck.top_k = static_cast<int>(r.u32());
        ck.schedule.eps0 = r.f64();
        ck.schedule.factor = r.f64();
        ck.schedule.mode = static_cast<EpsilonSchedule::Mode>(r.u32());
        ck.x_state_ids = r.ids();
        ck.policy = PolicyNet::read(r);
        return ck;
    }
};

}  // namespace opad
