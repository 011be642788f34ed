#include "sg/network.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace sg {

namespace {

constexpr double kNormEps = 1e-5;

// Z = X * W^T, batch-major in and out. W rows and X rows are both
// contiguous, so the inner product streams over memory.
DenseMatrix linear_bt(const DenseMatrix& x, const DenseMatrix& w) {
    if (x.cols != w.cols) throw ShapeError("linear_bt: dimension mismatch");
    DenseMatrix z(x.rows, w.rows);
    for (std::size_t b = 0; b < x.rows; ++b) {
        const double* xrow = x.data.data() + b * x.cols;
        double* zrow = z.data.data() + b * z.cols;
        for (std::size_t o = 0; o < w.rows; ++o) {
            const double* wrow = w.data.data() + o * w.cols;
            double acc = 0.0;
            for (std::size_t j = 0; j < w.cols; ++j) acc += xrow[j] * wrow[j];
            zrow[o] = acc;
        }
    }
    return z;
}

void check_finite_or_throw(const DenseMatrix& m, std::size_t layer, const char* what) {
    if (!all_finite(m.data.data(), m.data.size()))
        throw OverflowError(std::string("non-finite ") + what + " at layer " +
                                std::to_string(layer),
                            static_cast<int>(layer));
}

}  // namespace

FourierFeatures FourierFeatures::standard(std::size_t coords, std::size_t max_freq) {
    FourierFeatures ff;
    ff.coordinate_count = coords;
    ff.include_raw = true;
    ff.frequencies.resize(max_freq);
    for (std::size_t f = 0; f < max_freq; ++f) ff.frequencies[f] = static_cast<double>(f + 1);
    return ff;
}

MlpNetwork MlpNetwork::make(std::size_t input_dim, std::size_t width, std::size_t depth,
                            std::size_t output_dim, ActKind act,
                            std::optional<FourierFeatures> features,
                            std::optional<NormKind> norm) {
    MlpNetwork net;
    net.input_dim = input_dim;
    net.feature_map = std::move(features);
    if (net.feature_map) net.feature_map->coordinate_count = input_dim;
    std::size_t in = net.feature_dim();
    for (std::size_t l = 0; l < depth; ++l) {
        net.layers.push_back({in, width, Activation{act}, norm});
        in = width;
    }
    net.layers.push_back({in, output_dim, Activation{ActKind::Identity}, std::nullopt});
    for (const auto& spec : net.layers) {
        net.weights.emplace_back(spec.out_dim, spec.in_dim);
        net.biases.emplace_back(spec.out_dim);
        net.norm_scale.emplace_back(spec.norm ? spec.out_dim : 0, 1.0);
        net.norm_shift.emplace_back(spec.norm ? spec.out_dim : 0, 0.0);
    }
    return net;
}

bool MlpNetwork::has_norm() const {
    for (const auto& l : layers)
        if (l.norm) return true;
    return false;
}

std::size_t MlpNetwork::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layers.size(); ++l)
        n += weights[l].data.size() + biases[l].len() + norm_scale[l].len() +
             norm_shift[l].len();
    return n;
}

std::vector<MlpNetwork::BlockRange> MlpNetwork::block_ranges() const {
    std::vector<BlockRange> ranges;
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::size_t len = weights[l].data.size() + biases[l].len() +
                                norm_scale[l].len() + norm_shift[l].len();
        ranges.push_back({off, len});
        off += len;
    }
    return ranges;
}

DenseVector MlpNetwork::flatten_params() const {
    DenseVector flat(param_count());
    std::size_t off = 0;
    auto put = [&](const double* p, std::size_t n) {
        std::memcpy(flat.data.data() + off, p, n * sizeof(double));
        off += n;
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        put(weights[l].data.data(), weights[l].data.size());
        put(biases[l].data.data(), biases[l].len());
        put(norm_scale[l].data.data(), norm_scale[l].len());
        put(norm_shift[l].data.data(), norm_shift[l].len());
    }
    return flat;
}

void MlpNetwork::unflatten_params(const DenseVector& flat) {
    if (flat.len() != param_count())
        throw ShapeError("unflatten_params: flat length mismatch");
    std::size_t off = 0;
    auto take = [&](double* p, std::size_t n) {
        std::memcpy(p, flat.data.data() + off, n * sizeof(double));
        off += n;
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        take(weights[l].data.data(), weights[l].data.size());
        take(biases[l].data.data(), biases[l].len());
        take(norm_scale[l].data.data(), norm_scale[l].len());
        take(norm_shift[l].data.data(), norm_shift[l].len());
    }
}

// --- GradientBlocks --------------------------------------------------------

std::vector<std::pair<const double*, std::size_t>> GradientBlocks::Block::parts() const {
    std::vector<std::pair<const double*, std::size_t>> out;
    out.emplace_back(d_weight.data.data(), d_weight.data.size());
    out.emplace_back(d_bias.data.data(), d_bias.len());
    if (d_scale.len()) out.emplace_back(d_scale.data.data(), d_scale.len());
    if (d_shift.len()) out.emplace_back(d_shift.data.data(), d_shift.len());
    return out;
}

std::vector<std::pair<double*, std::size_t>> GradientBlocks::Block::parts_mut() {
    std::vector<std::pair<double*, std::size_t>> out;
    out.emplace_back(d_weight.data.data(), d_weight.data.size());
    out.emplace_back(d_bias.data.data(), d_bias.len());
    if (d_scale.len()) out.emplace_back(d_scale.data.data(), d_scale.len());
    if (d_shift.len()) out.emplace_back(d_shift.data.data(), d_shift.len());
    return out;
}

GradientBlocks GradientBlocks::zeros_like(const MlpNetwork& net) {
    GradientBlocks g;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Block b;
        b.d_weight = DenseMatrix(net.weights[l].rows, net.weights[l].cols);
        b.d_bias = DenseVector(net.biases[l].len());
        b.d_scale = DenseVector(net.norm_scale[l].len());
        b.d_shift = DenseVector(net.norm_shift[l].len());
        g.blocks.push_back(std::move(b));
    }
    return g;
}

std::size_t GradientBlocks::total_size() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
}

DenseVector GradientBlocks::flat() const {
    DenseVector out(total_size());
    std::size_t off = 0;
    for (const auto& b : blocks)
        for (const auto& [p, n] : b.parts()) {
            std::memcpy(out.data.data() + off, p, n * sizeof(double));
            off += n;
        }
    return out;
}

void GradientBlocks::add(const GradientBlocks& other) {
    if (other.blocks.size() != blocks.size())
        throw ShapeError("GradientBlocks::add: block count mismatch");
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        auto dst = blocks[l].parts_mut();
        auto src = other.blocks[l].parts();
        for (std::size_t k = 0; k < dst.size(); ++k)
            for (std::size_t i = 0; i < dst[k].second; ++i)
                dst[k].first[i] += src[k].first[i];
    }
}

void GradientBlocks::scale_block(std::size_t l, double factor) {
    for (auto& [p, n] : blocks[l].parts_mut())
        for (std::size_t i = 0; i < n; ++i) p[i] *= factor;
}

double GradientBlocks::block_std(std::size_t l) const {
    return empirical_std_joined(blocks[l].parts());
}

double GradientBlocks::block_sq_norm(std::size_t l) const {
    double acc = 0.0;
    for (const auto& [p, n] : blocks[l].parts())
        for (std::size_t i = 0; i < n; ++i) acc += p[i] * p[i];
    return acc;
}

bool GradientBlocks::block_finite(std::size_t l) const {
    for (const auto& [p, n] : blocks[l].parts())
        if (!all_finite(p, n)) return false;
    return true;
}

// --- feature map -----------------------------------------------------------

namespace {

struct FeatureState {
    DenseMatrix value;
    std::vector<DenseMatrix> d1, d2;
};

FeatureState apply_feature_map(const MlpNetwork& net, const DenseMatrix& x, int order) {
    const std::size_t b_count = x.rows;
    const std::size_t d = net.input_dim;
    FeatureState st;
    if (!net.feature_map) {
        st.value = x;
        if (order >= 1) {
            st.d1.assign(d, DenseMatrix(b_count, d));
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t b = 0; b < b_count; ++b) st.d1[i](b, i) = 1.0;
        }
        if (order >= 2) st.d2.assign(d, DenseMatrix(b_count, d));
        return st;
    }
    const auto& ff = *net.feature_map;
    const std::size_t m = ff.per_coord_dim();
    const std::size_t n0 = ff.output_dim();
    st.value = DenseMatrix(b_count, n0);
    if (order >= 1) st.d1.assign(d, DenseMatrix(b_count, n0));
    if (order >= 2) st.d2.assign(d, DenseMatrix(b_count, n0));
    const double pi = std::numbers::pi;
    for (std::size_t b = 0; b < b_count; ++b) {
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = x(b, i);
            std::size_t col = i * m;
            if (ff.include_raw) {
                st.value(b, col) = xi;
                if (order >= 1) st.d1[i](b, col) = 1.0;
                ++col;
            }
            for (double f : ff.frequencies) {
                const double w = pi * f;
                const double sn = std::sin(w * xi), cs = std::cos(w * xi);
                st.value(b, col) = sn;
                st.value(b, col + 1) = cs;
                if (order >= 1) {
                    st.d1[i](b, col) = w * cs;
                    st.d1[i](b, col + 1) = -w * sn;
                }
                if (order >= 2) {
                    st.d2[i](b, col) = -w * w * sn;
                    st.d2[i](b, col + 1) = -w * w * cs;
                }
                col += 2;
            }
        }
    }
    return st;
}

void batch_norm_forward(const DenseMatrix& z, const DenseVector& gamma,
                        const DenseVector& beta, DenseMatrix& out, DenseVector& mean,
                        DenseVector& var) {
    const std::size_t b_count = z.rows, n = z.cols;
    mean = DenseVector(n);
    var = DenseVector(n);
    for (std::size_t o = 0; o < n; ++o) {
        double mu = 0.0;
        for (std::size_t b = 0; b < b_count; ++b) mu += z(b, o);
        mu /= static_cast<double>(b_count);
        double v = 0.0;
        for (std::size_t b = 0; b < b_count; ++b) {
            const double dv = z(b, o) - mu;
            v += dv * dv;
        }
        v /= static_cast<double>(b_count);
        mean[o] = mu;
        var[o] = v;
    }
    out = DenseMatrix(b_count, n);
    for (std::size_t o = 0; o < n; ++o) {
        const double rstd = 1.0 / std::sqrt(var[o] + kNormEps);
        for (std::size_t b = 0; b < b_count; ++b)
            out(b, o) = gamma[o] * (z(b, o) - mean[o]) * rstd + beta[o];
    }
}

void layer_norm_forward(const DenseMatrix& z, const DenseVector& gamma,
                        const DenseVector& beta, DenseMatrix& out, DenseVector& mean,
                        DenseVector& rstd) {
    const std::size_t b_count = z.rows, n = z.cols;
    mean = DenseVector(b_count);
    rstd = DenseVector(b_count);
    out = DenseMatrix(b_count, n);
    for (std::size_t b = 0; b < b_count; ++b) {
        double mu = 0.0;
        for (std::size_t o = 0; o < n; ++o) mu += z(b, o);
        mu /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t o = 0; o < n; ++o) {
            const double dv = z(b, o) - mu;
            v += dv * dv;
        }
        v /= static_cast<double>(n);
        const double rs = 1.0 / std::sqrt(v + kNormEps);
        mean[b] = mu;
        rstd[b] = rs;
        for (std::size_t o = 0; o < n; ++o)
            out(b, o) = gamma[o] * (z(b, o) - mu) * rs + beta[o];
    }
}

}  // namespace

// --- forward ---------------------------------------------------------------

DerivativeTrace forward(const MlpNetwork& net, const DenseMatrix& points, int order) {
    if (points.cols != net.input_dim)
        throw ShapeError("forward: input dim " + std::to_string(points.cols) +
                         " does not match network input dim " +
                         std::to_string(net.input_dim));
    if (order >= 1 && net.has_norm())
        throw ContractError(
            "forward: derivative channels are not supported through norm layers");

    DerivativeTrace tr;
    tr.order = order;
    tr.batch = points.rows;
    tr.coords = net.input_dim;
    tr.input = points;

    FeatureState feat = apply_feature_map(net, points, order);
    tr.h.push_back(std::move(feat.value));
    if (order >= 1) tr.p.push_back(std::move(feat.d1));
    if (order >= 2) tr.q.push_back(std::move(feat.d2));

    const std::size_t nlayers = net.layers.size();
    tr.bn_mean.resize(nlayers);
    tr.bn_var.resize(nlayers);
    tr.ln_mean.resize(nlayers);
    tr.ln_rstd.resize(nlayers);
    tr.zn.resize(nlayers);

    for (std::size_t l = 0; l < nlayers; ++l) {
        const auto& spec = net.layers[l];
        DenseMatrix z = linear_bt(tr.h[l], net.weights[l]);
        for (std::size_t b = 0; b < tr.batch; ++b) {
            double* row = z.data.data() + b * z.cols;
            for (std::size_t o = 0; o < z.cols; ++o) row[o] += net.biases[l][o];
        }
        check_finite_or_throw(z, l, "preactivation");

        const DenseMatrix* act_arg = nullptr;
        if (spec.norm == NormKind::BatchNorm) {
            batch_norm_forward(z, net.norm_scale[l], net.norm_shift[l], tr.zn[l],
                               tr.bn_mean[l], tr.bn_var[l]);
            act_arg = &tr.zn[l];
        } else if (spec.norm == NormKind::LayerNorm) {
            layer_norm_forward(z, net.norm_scale[l], net.norm_shift[l], tr.zn[l],
                               tr.ln_mean[l], tr.ln_rstd[l]);
            act_arg = &tr.zn[l];
        }
        tr.z.push_back(std::move(z));
        if (!act_arg) act_arg = &tr.z.back();

        const Activation& act = spec.activation;
        DenseMatrix h(tr.batch, spec.out_dim), d1(tr.batch, spec.out_dim);
        DenseMatrix d2;
        if (order >= 1) d2 = DenseMatrix(tr.batch, spec.out_dim);
        for (std::size_t i = 0; i < h.data.size(); ++i) {
            const double v = act_arg->data[i];
            h.data[i] = act.f(v);
            d1.data[i] = act.d1(v);
            if (order >= 1) d2.data[i] = act.d2(v);
        }
        check_finite_or_throw(h, l, "activation");
        tr.act_d1.push_back(std::move(d1));
        if (order >= 1) tr.act_d2.push_back(std::move(d2));

        if (order >= 1) {
            std::vector<DenseMatrix> s_layer, p_next;
            for (std::size_t i = 0; i < tr.coords; ++i) {
                DenseMatrix s = linear_bt(tr.p[l][i], net.weights[l]);
                DenseMatrix pn(tr.batch, spec.out_dim);
                for (std::size_t k = 0; k < pn.data.size(); ++k)
                    pn.data[k] = tr.act_d1.back().data[k] * s.data[k];
                check_finite_or_throw(pn, l, "first-derivative channel");
                s_layer.push_back(std::move(s));
                p_next.push_back(std::move(pn));
            }
            tr.s.push_back(std::move(s_layer));
            tr.p.push_back(std::move(p_next));
        }
        if (order >= 2) {
            std::vector<DenseMatrix> t_layer, q_next;
            for (std::size_t i = 0; i < tr.coords; ++i) {
                DenseMatrix t = linear_bt(tr.q[l][i], net.weights[l]);
                DenseMatrix qn(tr.batch, spec.out_dim);
                const DenseMatrix& s = tr.s[l][i];
                for (std::size_t k = 0; k < qn.data.size(); ++k)
                    qn.data[k] = tr.act_d2.back().data[k] * s.data[k] * s.data[k] +
                                 tr.act_d1.back().data[k] * t.data[k];
                check_finite_or_throw(qn, l, "second-derivative channel");
                t_layer.push_back(std::move(t));
                q_next.push_back(std::move(qn));
            }
            tr.t.push_back(std::move(t_layer));
            tr.q.push_back(std::move(q_next));
        }
        tr.h.push_back(std::move(h));
    }
    return tr;
}

// --- reverse mode ----------------------------------------------------------

void backward_point(const MlpNetwork& net, const DerivativeTrace& trace,
                    const PointSeed& seed, GradientBlocks& out) {
    if (net.has_norm())
        throw ContractError("backward_point: norm layers support the value channel only");
    const std::size_t nlayers = net.layers.size();
    const std::size_t d = trace.coords;
    const bool use1 = !seed.first.empty();
    const bool use2 = !seed.second.empty();
    if (use1 && trace.order < 1)
        throw ContractError("backward_point: first-derivative adjoint without channel");
    if (use2 && trace.order < 2)
        throw ContractError("backward_point: second-derivative adjoint without channel");
    const std::size_t pt = seed.point;

    DenseVector a = seed.value;
    std::vector<DenseVector> bc(use1 || use2 ? d : 0), cc(use2 ? d : 0);
    if (use1 || use2)
        for (std::size_t i = 0; i < d; ++i)
            bc[i] = use1 ? seed.first[i] : DenseVector(net.output_dim());
    if (use2)
        for (std::size_t i = 0; i < d; ++i) cc[i] = seed.second[i];

    for (std::size_t l = nlayers; l-- > 0;) {
        const auto& spec = net.layers[l];
        const std::size_t nout = spec.out_dim, nin = spec.in_dim;
        const Activation& act = spec.activation;
        const double* d1r = trace.act_d1[l].data.data() + pt * nout;
        const double* d2r = trace.order >= 1 ? trace.act_d2[l].data.data() + pt * nout
                                             : nullptr;
        const double* zr = trace.z[l].data.data() + pt * nout;

        DenseVector dz(nout);
        for (std::size_t j = 0; j < nout; ++j) dz[j] = d1r[j] * a[j];
        std::vector<DenseVector> ds, dt;
        if (!bc.empty()) {
            ds.assign(d, DenseVector(nout));
            if (use2) dt.assign(d, DenseVector(nout));
            for (std::size_t i = 0; i < d; ++i) {
                const double* sr = trace.s[l][i].data.data() + pt * nout;
                const double* tr_r =
                    use2 ? trace.t[l][i].data.data() + pt * nout : nullptr;
                for (std::size_t j = 0; j < nout; ++j) {
                    dz[j] += d2r[j] * sr[j] * bc[i][j];
                    ds[i][j] = d1r[j] * bc[i][j];
                    if (use2) {
                        const double ci = cc[i][j];
                        dz[j] += (act.d3(zr[j]) * sr[j] * sr[j] + d2r[j] * tr_r[j]) * ci;
                        ds[i][j] += 2.0 * d2r[j] * sr[j] * ci;
                        dt[i][j] = d1r[j] * ci;
                    }
                }
            }
        }

        // parameter gradients
        auto& blk = out.blocks[l];
        const double* hrow = trace.h[l].data.data() + pt * nin;
        for (std::size_t o = 0; o < nout; ++o) {
            double* wrow = blk.d_weight.data.data() + o * nin;
            const double dzo = dz[o];
            for (std::size_t j = 0; j < nin; ++j) wrow[j] += dzo * hrow[j];
            blk.d_bias[o] += dzo;
        }
        if (!ds.empty()) {
            for (std::size_t i = 0; i < d; ++i) {
                const double* prow = trace.p[l][i].data.data() + pt * nin;
                for (std::size_t o = 0; o < nout; ++o) {
                    double* wrow = blk.d_weight.data.data() + o * nin;
                    const double dso = ds[i][o];
                    for (std::size_t j = 0; j < nin; ++j) wrow[j] += dso * prow[j];
                }
                if (use2) {
                    const double* qrow = trace.q[l][i].data.data() + pt * nin;
                    for (std::size_t o = 0; o < nout; ++o) {
                        double* wrow = blk.d_weight.data.data() + o * nin;
                        const double dto = dt[i][o];
                        for (std::size_t j = 0; j < nin; ++j) wrow[j] += dto * qrow[j];
                    }
                }
            }
        }

        if (l == 0) break;

        // propagate adjoints through W^T
        const DenseMatrix& w = net.weights[l];
        DenseVector a_in(nin);
        matvec_transpose_add(w, dz, a_in);
        a = std::move(a_in);
        for (std::size_t i = 0; i < bc.size(); ++i) {
            DenseVector b_in(nin);
            matvec_transpose_add(w, ds[i], b_in);
            bc[i] = std::move(b_in);
        }
        for (std::size_t i = 0; i < cc.size(); ++i) {
            DenseVector c_in(nin);
            matvec_transpose_add(w, dt[i], c_in);
            cc[i] = std::move(c_in);
        }
    }
}

GradientBlocks backward_params(const MlpNetwork& net, const DerivativeTrace& trace,
                               const AdjointSeeds& seeds) {
    if (trace.batch != seeds.value.rows)
        throw ShapeError("backward_params: batch mismatch");
    if (!seeds.first.empty() && trace.order < 1)
        throw ContractError("backward_params: first-derivative adjoint without channel");
    if (!seeds.second.empty() && trace.order < 2)
        throw ContractError("backward_params: second-derivative adjoint without channel");
    GradientBlocks out = GradientBlocks::zeros_like(net);
    PointSeed seed;
    const std::size_t d = trace.coords;
    for (std::size_t b = 0; b < trace.batch; ++b) {
        seed.point = b;
        seed.value = DenseVector(seeds.value.cols);
        for (std::size_t o = 0; o < seeds.value.cols; ++o) seed.value[o] = seeds.value(b, o);
        seed.first.clear();
        seed.second.clear();
        if (!seeds.first.empty()) {
            seed.first.resize(d);
            for (std::size_t i = 0; i < d; ++i) {
                seed.first[i] = DenseVector(seeds.first[i].cols);
                for (std::size_t o = 0; o < seeds.first[i].cols; ++o)
                    seed.first[i][o] = seeds.first[i](b, o);
            }
        }
        if (!seeds.second.empty()) {
            seed.second.resize(d);
            for (std::size_t i = 0; i < d; ++i) {
                seed.second[i] = DenseVector(seeds.second[i].cols);
                for (std::size_t o = 0; o < seeds.second[i].cols; ++o)
                    seed.second[i][o] = seeds.second[i](b, o);
            }
        }
        backward_point(net, trace, seed, out);
    }
    return out;
}

double output_adjoint_std(const AdjointSeeds& seeds) {
    if (seeds.value.data.empty())
        throw DomainError("output_adjoint_std: empty batch");
    return empirical_std(seeds.value.data.data(), seeds.value.data.size());
}

// --- initialization --------------------------------------------------------

void initialize(MlpNetwork& net, const Initializer& init, SeededRng& rng) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& spec = net.layers[l];
        const double gain = init.gain.value_or(spec.activation.default_gain());
        const double fan = static_cast<double>(init.mode == FanMode::FanIn ? spec.in_dim
                                                                           : spec.out_dim);
        const double stddev = gain / std::sqrt(fan);
        if (init.distribution == InitDistribution::Normal) {
            for (auto& wv : net.weights[l].data) wv = stddev * rng.normal();
        } else {
            const double bound = stddev * std::sqrt(3.0);
            for (auto& wv : net.weights[l].data) wv = rng.uniform(-bound, bound);
        }
        std::fill(net.biases[l].data.begin(), net.biases[l].data.end(), 0.0);
        std::fill(net.norm_scale[l].data.begin(), net.norm_scale[l].data.end(), 1.0);
        std::fill(net.norm_shift[l].data.begin(), net.norm_shift[l].data.end(), 0.0);
    }
}

// --- value-channel batched backward (norm-aware) ---------------------------

namespace {

// Backward of the value channel only; supports norm layers. Optionally
// records the std of the adjoint entering each layer's output.
GradientBlocks backward_value(const MlpNetwork& net, const DerivativeTrace& trace,
                              const DenseMatrix& value_adjoint,
                              std::vector<double>* adjoint_stds) {
    GradientBlocks out = GradientBlocks::zeros_like(net);
    const std::size_t b_count = trace.batch;
    if (adjoint_stds) adjoint_stds->assign(net.layers.size(), 0.0);

    DenseMatrix a = value_adjoint;  // d L / d h_{l+1}
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& spec = net.layers[l];
        const std::size_t nout = spec.out_dim;
        if (adjoint_stds)
            (*adjoint_stds)[l] = empirical_std(a.data.data(), a.data.size());

        // through the activation
        DenseMatrix dn(b_count, nout);
        for (std::size_t k = 0; k < dn.data.size(); ++k)
            dn.data[k] = a.data[k] * trace.act_d1[l].data[k];

        DenseMatrix dz;
        if (spec.norm == NormKind::BatchNorm) {
            dz = DenseMatrix(b_count, nout);
            const double nb = static_cast<double>(b_count);
            for (std::size_t o = 0; o < nout; ++o) {
                const double rstd = 1.0 / std::sqrt(trace.bn_var[l][o] + kNormEps);
                double sum_dzh = 0.0, sum_dzh_zh = 0.0, sum_dn = 0.0;
                for (std::size_t b = 0; b < b_count; ++b) {
                    const double zh = (trace.z[l](b, o) - trace.bn_mean[l][o]) * rstd;
                    const double dzh = dn(b, o) * net.norm_scale[l][o];
                    sum_dzh += dzh;
                    sum_dzh_zh += dzh * zh;
                    sum_dn += dn(b, o);
                    out.blocks[l].d_scale[o] += dn(b, o) * zh;
                }
                out.blocks[l].d_shift[o] += sum_dn;
                for (std::size_t b = 0; b < b_count; ++b) {
                    const double zh = (trace.z[l](b, o) - trace.bn_mean[l][o]) * rstd;
                    const double dzh = dn(b, o) * net.norm_scale[l][o];
                    dz(b, o) = rstd / nb * (nb * dzh - sum_dzh - zh * sum_dzh_zh);
                }
            }
        } else if (spec.norm == NormKind::LayerNorm) {
            dz = DenseMatrix(b_count, nout);
            const double nn = static_cast<double>(nout);
            for (std::size_t b = 0; b < b_count; ++b) {
                const double rstd = trace.ln_rstd[l][b];
                double sum_dzh = 0.0, sum_dzh_zh = 0.0;
                for (std::size_t o = 0; o < nout; ++o) {
                    const double zh = (trace.z[l](b, o) - trace.ln_mean[l][b]) * rstd;
                    const double dzh = dn(b, o) * net.norm_scale[l][o];
                    sum_dzh += dzh;
                    sum_dzh_zh += dzh * zh;
                    out.blocks[l].d_scale[o] += dn(b, o) * zh;
                    out.blocks[l].d_shift[o] += dn(b, o);
                }
                for (std::size_t o = 0; o < nout; ++o) {
                    const double zh = (trace.z[l](b, o) - trace.ln_mean[l][b]) * rstd;
                    const double dzh = dn(b, o) * net.norm_scale[l][o];
                    dz(b, o) = rstd / nn * (nn * dzh - sum_dzh - zh * sum_dzh_zh);
                }
            }
        } else {
            dz = std::move(dn);
        }

        matmul_at_b_add(dz, trace.h[l], out.blocks[l].d_weight);
        for (std::size_t b = 0; b < b_count; ++b)
            for (std::size_t o = 0; o < nout; ++o) out.blocks[l].d_bias[o] += dz(b, o);

        if (l > 0) a = matmul(dz, net.weights[l]);
    }
    return out;
}

}  // namespace

ScaleProbeResult scale_probe(const MlpNetwork& net, const DenseMatrix& points,
                             SeededRng& target_rng) {
    DerivativeTrace trace = forward(net, points, 0);
    const std::size_t b_count = trace.batch;
    const std::size_t nout = net.output_dim();

    // squared loss against random unit-normal targets; adjoint = u - y
    DenseMatrix adjoint(b_count, nout);
    const DenseMatrix& u = trace.h.back();
    for (std::size_t k = 0; k < adjoint.data.size(); ++k)
        adjoint.data[k] = u.data[k] - target_rng.normal();

    ScaleProbeResult res;
    res.sigma_out = empirical_std(adjoint.data.data(), adjoint.data.size());
    std::vector<double> adjoint_stds;
    res.grads = backward_value(net, trace, adjoint, &adjoint_stds);

    res.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        res.layers[l].activation_std =
            empirical_std(trace.h[l + 1].data.data(), trace.h[l + 1].data.size());
        res.layers[l].adjoint_std = adjoint_stds[l];
        res.layers[l].weight_grad_std = res.grads.block_std(l);
    }
    return res;
}

ActKind act_kind_from_string(const std::string& s) {
    if (s == "tanh") return ActKind::Tanh;
    if (s == "silu") return ActKind::Silu;
    if (s == "identity") return ActKind::Identity;
    throw ConfigError("unknown activation: " + s);
}

std::string to_string(ActKind k) {
    switch (k) {
        case ActKind::Tanh: return "tanh";
        case ActKind::Silu: return "silu";
        case ActKind::Identity: return "identity";
    }
    return "?";
}

}  // namespace sg
