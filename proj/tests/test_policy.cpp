#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <map>

#include "opad/policy.hpp"

using namespace opad;

namespace {

StateRepr make_state(std::vector<Vec> c_rows, std::vector<Vec> s_rows, int n_pool) {
    StateRepr s;
    s.cand_ids.resize(c_rows.size());
    for (std::size_t i = 0; i < c_rows.size(); ++i) s.cand_ids[i] = static_cast<int>(i);
    s.partition = s.cand_ids;
    s.c_rows = std::move(c_rows);
    s.s_rows = std::move(s_rows);
    s.n_pool = n_pool;
    s.check();
    return s;
}

std::vector<Vec> random_rows(int n, int dim, Rng& rng, double scale = 1.0) {
    std::vector<Vec> rows(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(dim)));
    for (Vec& r : rows)
        for (double& v : r) v = rng.normal(0.0, scale);
    return rows;
}

PolicyNet random_policy(int input_dim, PolicyConfig cfg, std::uint64_t seed) {
    Rng init(seed);
    PolicyNet p(input_dim, cfg, init);
    Vec theta = p.flatten();
    Rng fill(seed + 1000);
    for (double& v : theta) v = fill.normal(0.0, 0.3);
    p.load(theta);
    return p;
}

// Plain re-implementation of the policy forward pass from the flattened
// parameters, used as an independent oracle for Q-values and TD targets.
namespace oracle {

struct Net {
    std::vector<LayerSpec> spec;
    std::vector<Vec> W, b;
};

Net slice_net(std::vector<LayerSpec> spec, const Vec& flat, std::size_t& pos) {
    Net n;
    n.spec = std::move(spec);
    for (const LayerSpec& l : n.spec) {
        const std::size_t nw = static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out);
        n.W.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                         flat.begin() + static_cast<std::ptrdiff_t>(pos + nw));
        pos += nw;
        n.b.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                         flat.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(l.out)));
        pos += static_cast<std::size_t>(l.out);
    }
    return n;
}

Vec forward(const Net& n, Vec x) {
    for (std::size_t l = 0; l < n.spec.size(); ++l) {
        const int in = n.spec[l].in, out = n.spec[l].out;
        Vec z(static_cast<std::size_t>(out));
        for (int o = 0; o < out; ++o) {
            double acc = n.b[l][static_cast<std::size_t>(o)];
            for (int i = 0; i < in; ++i)
                acc += n.W[l][static_cast<std::size_t>(o * in + i)] * x[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] =
                n.spec[l].act == Act::ReLU ? (acc > 0.0 ? acc : 0.0) : acc;
        }
        x = std::move(z);
    }
    return x;
}

struct Policy {
    Net enc, head;
    int hidden = 0;
};

Policy split(const PolicyNet& p, int input_dim) {
    const int h = p.config().hidden;
    Policy out;
    out.hidden = h;
    const Vec flat = p.flatten();
    std::size_t pos = 0;
    out.enc = slice_net({{input_dim, h, Act::ReLU}, {h, h, Act::Identity}}, flat, pos);
    out.head = slice_net({{2 * h + 1, h, Act::ReLU}, {h, 1, Act::Identity}}, flat, pos);
    REQUIRE(pos == flat.size());
    return out;
}

Vec state_mean(const Policy& p, const std::vector<Vec>& s_rows) {
    std::vector<Vec> phis;
    for (const Vec& r : s_rows) phis.push_back(forward(p.enc, r));
    std::sort(phis.begin(), phis.end());
    Vec mean(phis[0].size(), 0.0);
    for (const Vec& phi : phis)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += phi[i];
    for (double& v : mean) v /= static_cast<double>(phis.size());
    return mean;
}

double q_row(const Policy& p, const Vec& c_row, const Vec& s_bar) {
    const Vec phi = forward(p.enc, c_row);
    const std::size_t h = phi.size();
    Vec in(2 * h + 1);
    double dot = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
        in[i] = phi[i];
        in[h + i] = phi[i] * s_bar[i];
        dot += phi[i] * s_bar[i];
    }
    in[2 * h] = dot;
    return forward(p.head, in)[0];
}

Vec q_values(const Policy& p, const StateRepr& s) {
    const Vec s_bar = state_mean(p, s.s_rows);
    Vec q;
    for (const Vec& c : s.c_rows) q.push_back(q_row(p, c, s_bar));
    return q;
}

}  // namespace oracle

}  // namespace

TEST_CASE("q-values agree with an independent forward replica") {
    PolicyConfig cfg;
    cfg.hidden = 5;
    const PolicyNet p = random_policy(4, cfg, 21);
    const oracle::Policy replica = oracle::split(p, 4);

    Rng rows(22);
    const StateRepr s = make_state(random_rows(6, 4, rows), random_rows(3, 4, rows), 2);
    const Vec got = p.q_values(s);
    const Vec want = oracle::q_values(replica, s);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == Catch::Approx(want[i]).margin(1e-12));
}

TEST_CASE("q-values are bit-exact under state-set permutations") {
    PolicyConfig cfg;
    cfg.hidden = 8;
    const PolicyNet p = random_policy(6, cfg, 31);

    Rng rows(32);
    std::vector<Vec> c = random_rows(5, 6, rows);
    std::vector<Vec> s_set = random_rows(7, 6, rows);

    const Vec base = p.q_values(make_state(c, s_set, 1));
    Rng shuffler(33);
    for (int t = 0; t < 8; ++t) {
        shuffler.shuffle(s_set);
        const Vec q = p.q_values(make_state(c, s_set, 1));
        CHECK(q == base);
    }
}

TEST_CASE("identical candidate rows score identically") {
    PolicyConfig cfg;
    cfg.hidden = 4;
    const PolicyNet p = random_policy(3, cfg, 41);
    Rng rows(42);
    Vec dup{0.4, -1.1, 2.0};
    std::vector<Vec> c{dup, random_rows(1, 3, rows)[0], dup};
    const Vec q = p.q_values(make_state(c, random_rows(2, 3, rows), 1));
    CHECK(q[0] == q[2]);
}

TEST_CASE("a fresh policy scores every action exactly zero") {
    Rng init(7);
    PolicyNet p(5, PolicyConfig{}, init);
    Rng rows(8);
    const StateRepr s = make_state(random_rows(6, 5, rows), random_rows(4, 5, rows), 3);
    for (double q : p.q_values(s)) CHECK(q == 0.0);
}

TEST_CASE("greedy selection takes the argmax of each mini-batch") {
    PolicyConfig cfg;
    cfg.hidden = 6;
    const PolicyNet p = random_policy(4, cfg, 51);
    Rng rows(52);
    StateRepr s = make_state(random_rows(8, 4, rows), random_rows(3, 4, rows), 4);
    // scramble the partition so blocks are not contiguous rows
    Rng part(53);
    part.shuffle(s.partition);

    Rng sel(54);
    const std::vector<int> actions = p.select_actions(s, 0.0, sel);
    const Vec q = p.q_values(s);
    REQUIRE(actions.size() == 2);
    for (int b = 0; b < 2; ++b) {
        int best = s.partition[static_cast<std::size_t>(b * 4)];
        for (int j = 1; j < 4; ++j) {
            const int row = s.partition[static_cast<std::size_t>(b * 4 + j)];
            if (q[static_cast<std::size_t>(row)] > q[static_cast<std::size_t>(best)]) best = row;
        }
        CHECK(actions[static_cast<std::size_t>(b)] == best);
    }

    // ε = 0 consumes no randomness: the same call twice gives the same result
    Rng sel2(999);
    CHECK(p.select_actions(s, 0.0, sel2) == actions);
}

TEST_CASE("ties break toward the lowest row index") {
    Rng init(7);
    PolicyNet p(3, PolicyConfig{}, init);  // zero head: all Q equal
    Rng rows(9);
    StateRepr s = make_state(random_rows(6, 3, rows), random_rows(2, 3, rows), 3);
    s.partition = {5, 2, 4, 1, 3, 0};
    Rng sel(10);
    CHECK(p.select_actions(s, 0.0, sel) == std::vector<int>{2, 0});
}

TEST_CASE("full exploration picks uniformly within each mini-batch") {
    PolicyConfig cfg;
    cfg.hidden = 4;
    const PolicyNet p = random_policy(3, cfg, 61);
    Rng rows(62);
    const StateRepr s = make_state(random_rows(4, 3, rows), random_rows(2, 3, rows), 4);

    std::map<int, int> counts;
    Rng sel(63);
    const int trials = 40000;
    for (int t = 0; t < trials; ++t) {
        const auto a = p.select_actions(s, 1.0, sel);
        REQUIRE(a.size() == 1);
        ++counts[a[0]];
    }
    REQUIRE(counts.size() == 4);
    for (const auto& [row, n] : counts)
        CHECK(std::fabs(static_cast<double>(n) / trials - 0.25) < 0.02);
}

TEST_CASE("replay buffer is a bounded fifo") {
    ReplayBuffer small(3);
    for (int i = 0; i < 5; ++i) {
        Transition t;
        t.reward = static_cast<double>(i);
        small.push(std::move(t));
    }
    REQUIRE(small.size() == 3);
    CHECK(small.at(0).reward == 2.0);
    CHECK(small.at(1).reward == 3.0);
    CHECK(small.at(2).reward == 4.0);

    ReplayBuffer dflt;
    CHECK(dflt.capacity() == 1000);
    for (int i = 0; i < 1001; ++i) {
        Transition t;
        t.reward = static_cast<double>(i);
        dflt.push(std::move(t));
    }
    CHECK(dflt.size() == 1000);
    CHECK(dflt.at(0).reward == 1.0);
    CHECK(dflt.at(999).reward == 1000.0);

    CHECK_THROWS_AS(ReplayBuffer(0), ConfigError);
}

TEST_CASE("mark_last_terminal flags only the newest transition") {
    ReplayBuffer buf(10);
    buf.mark_last_terminal();  // empty: no-op
    Transition a, b;
    buf.push(std::move(a));
    buf.push(std::move(b));
    buf.mark_last_terminal();
    CHECK_FALSE(buf.at(0).terminal);
    CHECK(buf.at(1).terminal);
}

TEST_CASE("replay sampling is uniform and without replacement") {
    ReplayBuffer buf(10);
    for (int i = 0; i < 6; ++i) {
        Transition t;
        t.reward = static_cast<double>(i);
        buf.push(std::move(t));
    }
    Rng rng(5);
    const auto all = buf.sample(100, rng);
    REQUIRE(all.size() == 6);
    std::vector<double> rewards;
    for (const Transition* t : all) rewards.push_back(t->reward);
    std::sort(rewards.begin(), rewards.end());
    CHECK(rewards == Vec{0.0, 1.0, 2.0, 3.0, 4.0, 5.0});

    const auto two = buf.sample(2, rng);
    REQUIRE(two.size() == 2);
    CHECK(two[0] != two[1]);
}

TEST_CASE("epsilon schedule decays as configured") {
    EpsilonSchedule mult;  // defaults 0.9, ×0.1
    CHECK(mult.eps0 == 0.9);
    CHECK(mult.factor == 0.1);
    CHECK(mult.value(0) == 0.9);
    CHECK(mult.value(1) == 0.9 * 0.1);
    CHECK(mult.value(2) == 0.9 * 0.1 * 0.1);
    CHECK(mult.value(6) == Catch::Approx(0.9e-6).epsilon(1e-12));
    CHECK_THROWS_AS(mult.value(-1), IntegrityError);

    EpsilonSchedule sub;
    sub.eps0 = 0.9;
    sub.factor = 0.2;
    sub.mode = EpsilonSchedule::Mode::Subtractive;
    CHECK(sub.value(0) == 0.9);
    CHECK(sub.value(1) == 0.9 - 0.2);
    CHECK(sub.value(4) == Catch::Approx(0.1).margin(1e-15));
    CHECK(sub.value(5) == 0.0);
    CHECK(sub.value(50) == 0.0);
}

TEST_CASE("terminal transitions and zero discount regress straight to the reward") {
    // zero-initialized head → every Q is 0, so the TD loss is exactly the
    // mean squared reward
    Rng init(71);
    PolicyConfig cfg;
    cfg.hidden = 4;
    cfg.batch_size = 8;
    PolicyNet p(3, cfg, init);
    Rng init2(71);
    PolicyNet target(3, cfg, init2);

    Rng rows(72);
    ReplayBuffer buf(10);
    Transition t1;
    t1.s_t = make_state(random_rows(4, 3, rows), random_rows(2, 3, rows), 2);
    t1.actions = {0, 2};
    t1.reward = 0.5;
    t1.terminal = true;
    buf.push(t1);

    Transition t2 = t1;
    t2.reward = -1.0;
    t2.terminal = false;
    t2.s_next = make_state(random_rows(4, 3, rows), random_rows(2, 3, rows), 2);
    ReplayBuffer buf2(10);
    buf2.push(t2);

    Rng opt(73);
    // terminal: y = R; both actions predict 0 → loss = (2·0.25)/2
    CHECK(p.optimize_step(target, buf, opt) == 0.25);

    // non-terminal with γ = 0: y = R exactly, even through the bootstrap path
    PolicyConfig zg = cfg;
    zg.gamma = 0.0;
    Rng init3(71);
    PolicyNet pz(3, zg, init3);
    Rng init4(71);
    PolicyNet tz(3, zg, init4);
    Rng opt2(74);
    CHECK(pz.optimize_step(tz, buf2, opt2) == 1.0);
}

TEST_CASE("optimize_step reproduces hand-assembled double-dqn targets") {
    PolicyConfig cfg;
    cfg.hidden = 3;
    cfg.gamma = 0.9;
    cfg.batch_size = 8;
    cfg.lr = 0.01;

    PolicyNet online = random_policy(2, cfg, 81);
    PolicyNet target = random_policy(2, cfg, 91);  // deliberately different

    Rng rows(82);
    Transition t;
    t.s_t = make_state(random_rows(4, 2, rows), random_rows(2, 2, rows), 2);
    t.s_next = make_state(random_rows(4, 2, rows), random_rows(3, 2, rows), 2);
    t.actions = {1, 2};
    t.reward = 0.3;
    t.terminal = false;

    const oracle::Policy on = oracle::split(online, 2);
    const oracle::Policy tg = oracle::split(target, 2);

    // y_b = R + γ · Q_target(s', argmax_online within block b)
    const Vec q_sel = oracle::q_values(on, t.s_next);
    const Vec s_bar_tg = oracle::state_mean(tg, t.s_next.s_rows);
    Vec y;
    for (int b = 0; b < 2; ++b) {
        int best = t.s_next.partition[static_cast<std::size_t>(b * 2)];
        for (int j = 1; j < 2; ++j) {
            const int row = t.s_next.partition[static_cast<std::size_t>(b * 2 + j)];
            if (q_sel[static_cast<std::size_t>(row)] > q_sel[static_cast<std::size_t>(best)] ||
                (q_sel[static_cast<std::size_t>(row)] == q_sel[static_cast<std::size_t>(best)] &&
                 row < best))
                best = row;
        }
        y.push_back(t.reward +
                    cfg.gamma * oracle::q_row(tg, t.s_next.c_rows[static_cast<std::size_t>(best)],
                                              s_bar_tg));
    }

    const Vec s_bar_on = oracle::state_mean(on, t.s_t.s_rows);
    double want_loss = 0.0;
    for (int b = 0; b < 2; ++b) {
        const double q = oracle::q_row(
            on, t.s_t.c_rows[static_cast<std::size_t>(t.actions[static_cast<std::size_t>(b)])],
            s_bar_on);
        const double err = q - y[static_cast<std::size_t>(b)];
        want_loss += err * err / 2.0;
    }

    ReplayBuffer buf(4);
    buf.push(t);
    Rng opt(83);
    const double got = online.optimize_step(target, buf, opt);
    CHECK(got == Catch::Approx(want_loss).margin(1e-9));

    // vanilla style: the target network both selects and evaluates
    PolicyNet online_v = random_policy(2, cfg, 81);
    PolicyConfig vcfg = cfg;
    vcfg.target_style = TargetStyle::Vanilla;
    Rng vinit(1);
    PolicyNet online_v2(2, vcfg, vinit);
    online_v2.load(online_v.flatten());

    const Vec q_sel_v = oracle::q_values(tg, t.s_next);
    Vec yv;
    for (int b = 0; b < 2; ++b) {
        int best = t.s_next.partition[static_cast<std::size_t>(b * 2)];
        for (int j = 1; j < 2; ++j) {
            const int row = t.s_next.partition[static_cast<std::size_t>(b * 2 + j)];
            if (q_sel_v[static_cast<std::size_t>(row)] > q_sel_v[static_cast<std::size_t>(best)] ||
                (q_sel_v[static_cast<std::size_t>(row)] == q_sel_v[static_cast<std::size_t>(best)] &&
                 row < best))
                best = row;
        }
        yv.push_back(t.reward +
                     cfg.gamma * oracle::q_row(tg, t.s_next.c_rows[static_cast<std::size_t>(best)],
                                               s_bar_tg));
    }
    double want_v = 0.0;
    for (int b = 0; b < 2; ++b) {
        const double q = oracle::q_row(
            on, t.s_t.c_rows[static_cast<std::size_t>(t.actions[static_cast<std::size_t>(b)])],
            s_bar_on);
        const double err = q - yv[static_cast<std::size_t>(b)];
        want_v += err * err / 2.0;
    }
    Rng opt_v(84);
    CHECK(online_v2.optimize_step(target, buf, opt_v) == Catch::Approx(want_v).margin(1e-9));
}

TEST_CASE("learning rate decays per optimize step") {
    PolicyConfig cfg;
    cfg.hidden = 3;
    cfg.lr = 0.01;
    cfg.lr_decay = 0.9;
    PolicyNet p = random_policy(2, cfg, 101);
    PolicyNet target = random_policy(2, cfg, 102);

    Rng rows(103);
    Transition t;
    t.s_t = make_state(random_rows(2, 2, rows), random_rows(2, 2, rows), 1);
    t.actions = {0, 1};
    t.reward = 1.0;
    t.terminal = true;
    ReplayBuffer buf(4);
    buf.push(std::move(t));

    CHECK(p.current_lr() == 0.01);
    Rng opt(104);
    double want = 0.01;
    for (int k = 1; k <= 5; ++k) {
        p.optimize_step(target, buf, opt);
        want *= 0.9;
        CHECK(p.current_lr() == want);
        CHECK(p.optimize_steps() == k);
    }
}

TEST_CASE("repeated optimize steps fit the replayed targets") {
    PolicyConfig cfg;
    cfg.hidden = 8;
    cfg.lr = 0.05;
    cfg.lr_decay = 1.0;
    cfg.gamma = 0.0;
    cfg.batch_size = 4;
    Rng init(111);
    PolicyNet p(3, cfg, init);
    PolicyNet target = p;

    Rng rows(112);
    ReplayBuffer buf(8);
    for (int i = 0; i < 4; ++i) {
        Transition t;
        t.s_t = make_state(random_rows(4, 3, rows), random_rows(2, 3, rows), 2);
        t.actions = {0, 3};
        t.reward = 0.2 * static_cast<double>(i + 1);
        t.terminal = true;
        buf.push(std::move(t));
    }

    Rng opt(113);
    const double first = p.optimize_step(target, buf, opt);
    double last = first;
    for (int k = 0; k < 200; ++k) {
        last = p.optimize_step(target, buf, opt);
        sync_target(p, target, 10);
    }
    CHECK(last < 0.1 * first);
}

TEST_CASE("sync_target copies on multiples of the interval") {
    PolicyConfig cfg;
    cfg.hidden = 3;
    PolicyNet online = random_policy(2, cfg, 121);
    PolicyNet target = random_policy(2, cfg, 122);

    REQUIRE(online.flatten() != target.flatten());
    sync_target(online, target, 10);  // 0 steps → multiple of 10
    CHECK(online.flatten() == target.flatten());

    Rng rows(123);
    Transition t;
    t.s_t = make_state(random_rows(2, 2, rows), random_rows(2, 2, rows), 1);
    t.actions = {0, 1};
    t.reward = 1.0;
    t.terminal = true;
    ReplayBuffer buf(4);
    buf.push(std::move(t));
    Rng opt(124);
    online.optimize_step(target, buf, opt);

    const Vec before = target.flatten();
    sync_target(online, target, 10);  // 1 step → no sync
    CHECK(target.flatten() == before);
    CHECK(online.flatten() != before);

    CHECK_THROWS_AS(sync_target(online, target, 0), ConfigError);
}

TEST_CASE("q_with_grad matches central differences through the whole chain") {
    PolicyConfig cfg;
    cfg.hidden = 4;
    PolicyNet p = random_policy(3, cfg, 131);

    Rng rows(132);
    const StateRepr s = make_state(random_rows(3, 3, rows), random_rows(2, 3, rows), 1);

    for (int row = 0; row < 3; ++row) {
        const auto [q, grad] = p.q_with_grad(s, row);
        CHECK(q == Catch::Approx(p.q_values(s)[static_cast<std::size_t>(row)]).margin(1e-12));

        Vec theta = p.flatten();
        REQUIRE(grad.size() == theta.size());
        PolicyNet probe = p;
        const double h = 1e-6;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double keep = theta[i];
            theta[i] = keep + h;
            probe.load(theta);
            const double up = probe.q_values(s)[static_cast<std::size_t>(row)];
            theta[i] = keep - h;
            probe.load(theta);
            const double dn = probe.q_values(s)[static_cast<std::size_t>(row)];
            theta[i] = keep;
            const double num = (up - dn) / (2.0 * h);
            const double err = std::fabs(grad[i] - num) /
                               std::max({std::fabs(grad[i]), std::fabs(num), 1e-6});
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("policy state round-trips with optimizer continuity") {
    PolicyConfig cfg;
    cfg.hidden = 4;
    cfg.lr = 0.02;
    cfg.lr_decay = 0.99;
    cfg.batch_size = 2;
    cfg.sync_every = 3;
    cfg.target_style = TargetStyle::Vanilla;
    PolicyNet p = random_policy(3, cfg, 141);
    PolicyNet target = random_policy(3, cfg, 142);

    Rng rows(143);
    ReplayBuffer buf(8);
    for (int i = 0; i < 3; ++i) {
        Transition t;
        t.s_t = make_state(random_rows(2, 3, rows), random_rows(2, 3, rows), 1);
        t.actions = {0, 1};
        t.reward = 0.1 * static_cast<double>(i);
        t.terminal = true;
        buf.push(std::move(t));
    }
    Rng opt(144);
    for (int k = 0; k < 7; ++k) p.optimize_step(target, buf, opt);

    BinWriter w;
    p.write(w);
    BinReader r(w.bytes());
    PolicyNet back = PolicyNet::read(r);

    CHECK(back.flatten() == p.flatten());
    CHECK(back.current_lr() == p.current_lr());
    CHECK(back.optimize_steps() == 7);
    CHECK(back.config().sync_every == 3);
    CHECK(back.config().target_style == TargetStyle::Vanilla);
    CHECK(back.input_dim() == 3);

    // momentum buffers persist: one more identical step stays in lockstep
    Rng o1(145), o2(145);
    p.optimize_step(target, buf, o1);
    back.optimize_step(target, buf, o2);
    CHECK(back.flatten() == p.flatten());

    CHECK_THROWS_AS(p.load(Vec(3, 0.0)), IntegrityError);
}

TEST_CASE("policy checkpoints persist schedule and encoding context") {
    PolicyConfig cfg;
    cfg.hidden = 4;
    PolicyCheckpoint ck;
    ck.policy = random_policy(5, cfg, 151);
    ck.schedule.eps0 = 0.8;
    ck.schedule.factor = 0.25;
    ck.schedule.mode = EpsilonSchedule::Mode::Subtractive;
    ck.x_state_ids = {3, 1, 4, 1, 5};
    ck.top_k = 7;
    ck.task = TaskKind::Sequence;

    const std::string path = "test_policy_ck.bin";
    ck.save(path);
    const PolicyCheckpoint back = PolicyCheckpoint::load(path);
    std::remove(path.c_str());

    CHECK(back.task == TaskKind::Sequence);
    CHECK(back.top_k == 7);
    CHECK(back.schedule.eps0 == 0.8);
    CHECK(back.schedule.factor == 0.25);
    CHECK(back.schedule.mode == EpsilonSchedule::Mode::Subtractive);
    CHECK(back.x_state_ids == std::vector<int>{3, 1, 4, 1, 5});
    CHECK(back.policy.flatten() == ck.policy.flatten());

    Rng rows(152);
    const StateRepr s = make_state(random_rows(3, 5, rows), random_rows(2, 5, rows), 1);
    CHECK(back.policy.q_values(s) == ck.policy.q_values(s));

    CHECK_THROWS_AS(PolicyCheckpoint::load("does_not_exist.bin"), IoError);
}
