#include "tempogs/ssim.hpp"

#include <cmath>
#include <stdexcept>

namespace tempogs {

namespace {

struct Window {
    std::vector<double> w;  // weights for offsets [-r, r]
    int r = 0;
};

Window make_window(const SsimSettings& st) {
    Window win;
    win.r = st.window / 2;
    win.w.resize(st.window);
    for (int k = -win.r; k <= win.r; ++k) {
        win.w[k + win.r] = std::exp(-0.5 * k * k / (st.window_sigma * st.window_sigma));
    }
    return win;
}

// Separable windowed average. With normalize=true the window is renormalized
// over its in-bounds support per position; with normalize=false a plain
// truncated correlation is computed (the adjoint pass divides by the
// normalizers up front).
std::vector<double> blur(const std::vector<double>& src, int width, int height,
                         const Window& win, bool normalize) {
    std::vector<double> tmp(src.size()), out(src.size());
    for (int row = 0; row < height; ++row) {
        const double* in = src.data() + static_cast<size_t>(row) * width;
        double* o = tmp.data() + static_cast<size_t>(row) * width;
        for (int col = 0; col < width; ++col) {
            double acc = 0, norm = 0;
            const int k0 = std::max(-win.r, -col), k1 = std::min(win.r, width - 1 - col);
            for (int k = k0; k <= k1; ++k) {
                acc += win.w[k + win.r] * in[col + k];
                norm += win.w[k + win.r];
            }
            o[col] = normalize ? acc / norm : acc;
        }
    }
    for (int col = 0; col < width; ++col) {
        for (int row = 0; row < height; ++row) {
            double acc = 0, norm = 0;
            const int k0 = std::max(-win.r, -row), k1 = std::min(win.r, height - 1 - row);
            for (int k = k0; k <= k1; ++k) {
                acc += win.w[k + win.r] * tmp[static_cast<size_t>(row + k) * width + col];
                norm += win.w[k + win.r];
            }
            out[static_cast<size_t>(row) * width + col] = normalize ? acc / norm : acc;
        }
    }
    return out;
}

// Per-axis normalizer of the truncated window at a given position.
double axis_norm(const Window& win, int pos, int size) {
    double norm = 0;
    const int k0 = std::max(-win.r, -pos), k1 = std::min(win.r, size - 1 - pos);
    for (int k = k0; k <= k1; ++k) norm += win.w[k + win.r];
    return norm;
}

struct Moments {
    std::vector<double> lx, ly;               // luma
    std::vector<double> mux, muy, sx2, sy2, sxy;
};

Moments compute_moments(const Image& x, const Image& y, const Window& win) {
    Moments m;
    m.lx = to_luma(x);
    m.ly = to_luma(y);
    const size_t n = m.lx.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (size_t i = 0; i < n; ++i) {
        xx[i] = m.lx[i] * m.lx[i];
        yy[i] = m.ly[i] * m.ly[i];
        xy[i] = m.lx[i] * m.ly[i];
    }
    m.mux = blur(m.lx, x.width, x.height, win, true);
    m.muy = blur(m.ly, x.width, x.height, win, true);
    m.sx2 = blur(xx, x.width, x.height, win, true);
    m.sy2 = blur(yy, x.width, x.height, win, true);
    m.sxy = blur(xy, x.width, x.height, win, true);
    for (size_t i = 0; i < n; ++i) {
        m.sx2[i] -= m.mux[i] * m.mux[i];
        m.sy2[i] -= m.muy[i] * m.muy[i];
        m.sxy[i] -= m.mux[i] * m.muy[i];
    }
    return m;
}

}  // namespace

void SsimSettings::validate() const {
    if (window < 3 || window % 2 == 0) throw std::invalid_argument("ssim window must be odd and >= 3");
    if (!(c1 > 0) || !(c2 > 0)) throw std::invalid_argument("ssim constants must be positive");
    if (contrast_exponent < 0 || contrast_exponent > 1) {
        throw std::invalid_argument("contrast exponent must be in [0,1]");
    }
}

SsimMap ssim(const Image& x, const Image& y, const SsimSettings& st) {
    st.validate();
    require_same_size(x, y);
    const Window win = make_window(st);
    const Moments m = compute_moments(x, y, win);

    SsimMap out;
    out.width = x.width;
    out.height = x.height;
    out.map.resize(m.mux.size());
    double total = 0;
    for (size_t i = 0; i < out.map.size(); ++i) {
        // l * c * s with C3 = C2/2 collapses to the two-factor form.
        const double l = (2 * m.mux[i] * m.muy[i] + st.c1) /
                         (m.mux[i] * m.mux[i] + m.muy[i] * m.muy[i] + st.c1);
        const double cs = (2 * m.sxy[i] + st.c2) / (m.sx2[i] + m.sy2[i] + st.c2);
        out.map[i] = l * cs;
        total += out.map[i];
    }
    out.mean = total / static_cast<double>(out.map.size());
    return out;
}

SsimMap mssim(const Image& x, const Image& y, const SsimSettings& st) {
    st.validate();
    require_same_size(x, y);
    const Window win = make_window(st);
    const Moments m = compute_moments(x, y, win);
    const double c3 = st.c2 / 2.0;

    SsimMap out;
    out.width = x.width;
    out.height = x.height;
    out.map.resize(m.mux.size());
    double total = 0;
    for (size_t i = 0; i < out.map.size(); ++i) {
        const double sx = std::sqrt(std::max(m.sx2[i], 0.0));
        const double sy = std::sqrt(std::max(m.sy2[i], 0.0));
        const double contrast = (2 * sx * sy + st.c2) / (sx * sx + sy * sy + st.c2);
        const double structure = (m.sxy[i] + c3) / (sx * sy + c3);
        const double s_clamped = std::clamp(structure, 0.0, 1.0);
        out.map[i] = std::pow(contrast, st.contrast_exponent) * s_clamped;
        total += out.map[i];
    }
    out.mean = total / static_cast<double>(out.map.size());
    return out;
}

Image ssim_backward(const Image& x, const Image& y, const std::vector<double>& upstream,
                    const SsimSettings& st) {
    st.validate();
    require_same_size(x, y);
    if (upstream.size() != x.pixel_count()) {
        throw std::invalid_argument("upstream weight map size mismatch");
    }
    const Window win = make_window(st);
    const Moments m = compute_moments(x, y, win);
    const size_t n = m.mux.size();

    // Per-center partials of S = l * cs in the raw-moment coordinates
    // (m1 = E[a], m2 = E[a^2], m12 = E[ab]).
    std::vector<double> p1(n), p2(n), p3(n);
    for (size_t i = 0; i < n; ++i) {
        const double mux = m.mux[i], muy = m.muy[i];
        const double nl = 2 * mux * muy + st.c1;
        const double dl = mux * mux + muy * muy + st.c1;
        const double l = nl / dl;
        const double ncs = 2 * m.sxy[i] + st.c2;
        const double dcs = m.sx2[i] + m.sy2[i] + st.c2;
        const double cs = ncs / dcs;

        const double dl_dmux = (2 * muy * dl - nl * 2 * mux) / (dl * dl);
        const double dcs_dsx2 = -ncs / (dcs * dcs);
        const double dcs_dsxy = 2.0 / dcs;

        const double g = upstream[i];
        p1[i] = g * (cs * dl_dmux + l * (dcs_dsx2 * (-2 * mux) + dcs_dsxy * (-muy)));
        p2[i] = g * (l * dcs_dsx2);
        p3[i] = g * (l * dcs_dsxy);
    }

    // Adjoint of the renormalized blur: divide by the per-axis normalizers,
    // then run a plain truncated correlation.
    std::vector<double> col_norm(x.width), row_norm(x.height);
    for (int c = 0; c < x.width; ++c) col_norm[c] = axis_norm(win, c, x.width);
    for (int r = 0; r < x.height; ++r) row_norm[r] = axis_norm(win, r, x.height);
    auto adjoint = [&](std::vector<double>& v) {
        for (int r = 0; r < x.height; ++r) {
            for (int c = 0; c < x.width; ++c) {
                v[static_cast<size_t>(r) * x.width + c] /= col_norm[c] * row_norm[r];
            }
        }
        return blur(v, x.width, x.height, win, false);
    };
    const std::vector<double> g1 = adjoint(p1);
    const std::vector<double> g2 = adjoint(p2);
    const std::vector<double> g3 = adjoint(p3);

    Image grad(x.width, x.height);
    for (size_t i = 0; i < n; ++i) {
        const double da = g1[i] + 2 * m.lx[i] * g2[i] + m.ly[i] * g3[i];
        grad.pixels[3 * i] = da * kLumaR;
        grad.pixels[3 * i + 1] = da * kLumaG;
        grad.pixels[3 * i + 2] = da * kLumaB;
    }
    return grad;
}

}  // namespace tempogs
