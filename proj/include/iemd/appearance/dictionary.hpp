#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iemd/appearance/image.hpp"
#include "iemd/errors.hpp"

namespace iemd::appearance {

/**
 * Sliding-window patch layout inside the normalized object window. Dictionary
 * atoms come from the grid with stride `step` (K patches); histograms encode
 * the denser grid with stride `encode_step` (J patches).
 */
struct PatchScheme
{
    int patch_height = 16;   // m
    int patch_width = 16;    // n
    int step = 8;
    int window_height = 32;
    int window_width = 32;
    int encode_step = 2;

    void validate() const
    {
        if (patch_height < 1 || patch_width < 1 || step < 1 || encode_step < 1 || window_height < 1 ||
            window_width < 1)
            throw InvalidConfig("patch scheme dimensions and step must be positive");
        if (patch_height > window_height || patch_width > window_width)
            throw PatchLargerThanWindow("patch " + std::to_string(patch_height) + "x" + std::to_string(patch_width) +
                                        " exceeds window " + std::to_string(window_height) + "x" +
                                        std::to_string(window_width));
    }

    int grid_rows() const { return (window_height - patch_height) / step + 1; }
    int grid_cols() const { return (window_width - patch_width) / step + 1; }
    int patch_count() const { return grid_rows() * grid_cols(); }
    int feature_size() const { return patch_height * patch_width; }

    /** Top-left pixel of patch j (row-major over the grid). */
    Eigen::Vector2i patch_origin(int j) const
    {
        return {(j % grid_cols()) * step, (j / grid_cols()) * step};
    }

    /** Center of patch j relative to the window center, in window pixels. */
    Point2 patch_center(int j) const
    {
        const Eigen::Vector2i o = patch_origin(j);
        return {o.x() + 0.5 * patch_width - 0.5 * window_width, o.y() + 0.5 * patch_height - 0.5 * window_height};
    }

    int encode_rows() const { return (window_height - patch_height) / encode_step + 1; }
    int encode_cols() const { return (window_width - patch_width) / encode_step + 1; }
    int encode_count() const { return encode_rows() * encode_cols(); }

    Eigen::Vector2i encode_origin(int r) const
    {
        return {(r % encode_cols()) * encode_step, (r / encode_cols()) * encode_step};
    }

    Point2 encode_center(int r) const
    {
        const Eigen::Vector2i o = encode_origin(r);
        return {o.x() + 0.5 * patch_width - 0.5 * window_width, o.y() + 0.5 * patch_height - 0.5 * window_height};
    }

    double window_diagonal() const { return std::hypot(window_width, window_height); }
};

/** Patch with top-left pixel `o`, vectorized row by row. */
inline Eigen::VectorXd extract_patch_at(const GrayImage& window, const PatchScheme& scheme, const Eigen::Vector2i& o)
{
    Eigen::VectorXd v(scheme.feature_size());
    for (int r = 0; r < scheme.patch_height; ++r)
        for (int c = 0; c < scheme.patch_width; ++c) v[r * scheme.patch_width + c] = window(o.y() + r, o.x() + c);
    return v;
}

/** Dictionary-grid patch j of a window. */
inline Eigen::VectorXd extract_patch(const GrayImage& window, const PatchScheme& scheme, int j)
{
    return extract_patch_at(window, scheme, scheme.patch_origin(j));
}

/** All K patches of a window as the columns of an (m n) x K matrix. */
inline Eigen::MatrixXd template_atoms(const GrayImage& window, const PatchScheme& scheme)
{
    if (window.rows() != scheme.window_height || window.cols() != scheme.window_width)
        throw DimensionMismatch("template does not match the scheme's window size");
    Eigen::MatrixXd cols(scheme.feature_size(), scheme.patch_count());
    for (int j = 0; j < scheme.patch_count(); ++j) cols.col(j) = extract_patch(window, scheme, j);
    return cols;
}

/**
 * Patch dictionary Phi with L * K columns; column i * K + j is patch j of
 * template i. Keeps the L2-normalized atoms and their Gram matrix for
 * encoding. Immutable apart from template replacement/append.
 */
class Dictionary
{
    public:
        Dictionary(PatchScheme scheme, Eigen::MatrixXd atoms) : scheme_(scheme), atoms_(std::move(atoms))
        {
            scheme_.validate();
            if (atoms_.rows() != scheme_.feature_size() || atoms_.cols() == 0 ||
                atoms_.cols() % scheme_.patch_count() != 0)
                throw DimensionMismatch("dictionary atoms must be (m n) x (L K)");
            refresh();
        }

        const PatchScheme& scheme() const { return scheme_; }
        int templates() const { return static_cast<int>(atoms_.cols() / scheme_.patch_count()); }
        int patches_per_template() const { return scheme_.patch_count(); }
        int atom_count() const { return static_cast<int>(atoms_.cols()); }

        const Eigen::MatrixXd& atoms() const { return atoms_; }
        const Eigen::MatrixXd& unit_atoms() const { return unit_atoms_; }
        const Eigen::MatrixXd& gram() const { return gram_; }

        Point2 center(int j) const { return scheme_.patch_center(j); }

        /** m n < L K. Not enforced: the 16x16-patch layouts are undercomplete. */
        bool is_overcomplete() const { return atoms_.rows() < atoms_.cols(); }

        void replace_template(int i, const Eigen::MatrixXd& columns)
        {
            const int k = patches_per_template();
            if (i < 0 || i >= templates() || columns.rows() != atoms_.rows() || columns.cols() != k)
                throw DimensionMismatch("replacement template has the wrong shape");
            atoms_.middleCols(static_cast<Eigen::Index>(i) * k, k) = columns;
            refresh();
        }

        void append_template(const Eigen::MatrixXd& columns)
        {
            if (columns.rows() != atoms_.rows() || columns.cols() != patches_per_template())
                throw DimensionMismatch("appended template has the wrong shape");
            Eigen::MatrixXd grown(atoms_.rows(), atoms_.cols() + columns.cols());
            grown << atoms_, columns;
            atoms_ = std::move(grown);
            refresh();
        }

    private:
        void refresh()
        {
            if (!atoms_.allFinite() || atoms_.minCoeff() < 0.0 || atoms_.maxCoeff() > 1.0)
                throw InvalidConfig("dictionary pixel values must lie in [0, 1]");
            unit_atoms_ = atoms_;
            for (Eigen::Index k = 0; k < unit_atoms_.cols(); ++k) {
                const double n = unit_atoms_.col(k).norm();
                if (n > 0) unit_atoms_.col(k) /= n;
            }
            gram_ = unit_atoms_.transpose() * unit_atoms_;
        }

        PatchScheme scheme_;
        Eigen::MatrixXd atoms_;
        Eigen::MatrixXd unit_atoms_;
        Eigen::MatrixXd gram_;
};

inline Dictionary build_dictionary(std::span<const GrayImage> templates, const PatchScheme& scheme)
{
    if (templates.empty())
        throw EmptyTemplateSet("dictionary needs at least one template");
    scheme.validate();
    const int k = scheme.patch_count();
    Eigen::MatrixXd atoms(scheme.feature_size(), static_cast<Eigen::Index>(templates.size()) * k);
    for (std::size_t i = 0; i < templates.size(); ++i)
        atoms.middleCols(static_cast<Eigen::Index>(i) * k, k) = template_atoms(templates[i], scheme);
    return Dictionary(scheme, std::move(atoms));
}

/**
 * Text export: header `m n L K`, then m n rows of L K values (row-major),
 * printed with 17 significant digits so a round trip is exact.
 */
inline void write_dictionary(std::ostream& out, const Dictionary& dict)
{
    const auto& s = dict.scheme();
    out << s.patch_height << ' ' << s.patch_width << ' ' << dict.templates() << ' ' << dict.patches_per_template()
        << '\n';
    char buf[40];
    for (Eigen::Index r = 0; r < dict.atoms().rows(); ++r) {
        for (Eigen::Index c = 0; c < dict.atoms().cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", dict.atoms()(r, c));
            out << (c ? " " : "") << buf;
        }
        out << '\n';
    }
}

inline Dictionary read_dictionary(std::istream& in, const PatchScheme& scheme)
{
    int m = 0, n = 0, l = 0, k = 0;
    if (!(in >> m >> n >> l >> k))
        throw ParseError("dictionary header must be `m n L K`");
    if (m != scheme.patch_height || n != scheme.patch_width || k != scheme.patch_count() || l < 1)
        throw DimensionMismatch("dictionary header does not match the patch scheme");
    Eigen::MatrixXd atoms(m * n, static_cast<Eigen::Index>(l) * k);
    for (Eigen::Index r = 0; r < atoms.rows(); ++r)
        for (Eigen::Index c = 0; c < atoms.cols(); ++c)
            if (!(in >> atoms(r, c)))
                throw ParseError("dictionary body is truncated or malformed");
    return Dictionary(scheme, std::move(atoms));
}

}   // namespace iemd::appearance
