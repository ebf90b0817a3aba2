// Command-line front end: dataset generation, classical solvers, training,
// evaluation, ablations, sweeps and comparison panels.

#include "vmtu/ch_classical.hpp"
#include "vmtu/chan_vese.hpp"
#include "vmtu/data_io.hpp"
#include "vmtu/error.hpp"
#include "vmtu/train.hpp"
#include "vmtu/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kDiverged = 3, kIo = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path with_suffix(const fs::path& p, const std::string& suffix)
{
    fs::path out = p;
    out.replace_extension();
    return out.string() + suffix;
}

std::string option_value(const CLI::Option* opt)
{
    if (opt->get_expected_min() == 0)
        return opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    if (opt->count() == 0)
        return opt->get_default_str();
    std::string joined;
    for (const auto& r : opt->results())
        joined += (joined.empty() ? "" : ",") + r;
    return joined;
}

bool stamp_skips(const std::string& name) { return name == "help" || name == "config"; }

/// Fills every option not given on the command line from a JSON object, or from a stamp.
void apply_config(CLI::App* sub, const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw vmtu::IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    if (j.is_object() && j.contains("command") && j.contains("config"))
        j = j.at("config");
    if (!j.is_object())
        throw UsageError("config " + path.string() + " must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || stamp_skips(key))
            throw UsageError("config key '" + key + "' is not an option of " + sub->get_name());
        if (opt->count() > 0)
            continue;  // command line wins
        std::string text;
        if (value.is_array()) {
            for (const auto& v : value)
                text += (text.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
        } else {
            text = value.is_string() ? value.get<std::string>() : value.dump();
        }
        if (text.empty())
            continue;
        opt->add_result(text);
        opt->run_callback();
    }
}

/// Options marked required are checked here so that --config can supply them.
void check_required(const CLI::App* sub)
{
    for (const CLI::Option* opt : sub->get_options())
        if (opt->count() == 0 && opt->get_description().find("(required)") != std::string::npos)
            throw UsageError(opt->get_name() + " is required");
}

void write_stamp(const fs::path& path, const CLI::App* sub, const json& extra = json::object())
{
    json cfg = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_lnames().empty() || stamp_skips(opt->get_lnames().front()))
            continue;
        cfg[opt->get_lnames().front()] = option_value(opt);
    }
    json stamp{{"tool", "vmtu"}, {"version", vmtu::kVersion}, {"command", sub->get_name()}, {"config", cfg}};
    for (const auto& [k, v] : extra.items())
        stamp[k] = v;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw vmtu::IoError("cannot write stamp " + path.string());
    os << stamp.dump(2) << '\n';
}

template <typename Row, typename Fn>
void write_csv(const fs::path& path, const std::string& header, const std::vector<Row>& rows, Fn fn)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw vmtu::IoError("cannot open " + path.string() + " for writing");
    os << std::setprecision(17) << header << '\n';
    for (const Row& r : rows)
        fn(os, r);
    if (!os)
        throw vmtu::IoError("failed writing " + path.string());
}

vmtu::BinaryMask field_mask(const vmtu::ScalarField& m)
{
    vmtu::BinaryMask out(m.height(), m.width());
    for (std::size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = m.values()[i] >= 0.5 ? 1 : 0;
    return out;
}

void report_dice(const std::string& gt_path, const vmtu::BinaryMask& pred, json& extra)
{
    if (gt_path.empty())
        return;
    const vmtu::BinaryMask gt = vmtu::read_mask(gt_path);
    const vmtu::DiceResult d = vmtu::dice(pred, gt);
    std::cout << "dice " << std::setprecision(6) << d.value << " pixel_accuracy " << vmtu::pixel_accuracy(pred, gt)
              << '\n';
    extra["dice"] = d.value;
}

// ---- model and training options shared by train / ablate / sweep ----

struct ModelOpts {
    std::vector<int> channels{8, 8, 16};
    int blocks = 10;
    double tau = 0.5;
    double eps1 = 1.0;
    double eps2 = 1.0;
    double h = vmtu::VMTUNetConfig{}.h;
    std::string scheme = "tfpm";
    std::string bc = "periodic";
    std::string fnet = "unet";
    int width_divisor = 32;
    bool freeze_center = false;
};

struct TrainOpts {
    std::string manifest;
    int epochs = 600;
    double lr = 1e-3;
    std::string loss = "bce";
    std::uint64_t seed = 7;
    int batch = 4;
    int eval_every = 10;
};

void add_model_options(CLI::App* sub, ModelOpts& m)
{
    sub->add_option("--channels", m.channels, "UNet channels vector c")->delimiter(',');
    sub->add_option("--blocks", m.blocks, "number of unrolled blocks M")->check(CLI::PositiveNumber);
    sub->add_option("--tau", m.tau, "time step")->check(CLI::PositiveNumber);
    sub->add_option("--eps1", m.eps1, "interface coefficient")->check(CLI::PositiveNumber);
    sub->add_option("--eps2", m.eps2, "double-well scale")->check(CLI::PositiveNumber);
    sub->add_option("--h", m.h, "grid spacing")->check(CLI::PositiveNumber);
    sub->add_option("--scheme", m.scheme, "block Laplacian")->check(CLI::IsMember({"tfpm", "fdm"}));
    sub->add_option("--bc", m.bc, "boundary condition")->check(CLI::IsMember({"neumann", "periodic"}));
    sub->add_option("--fnet", m.fnet, "force approximator")
        ->check(CLI::IsMember({"unet", "flatcnn", "residual", "dense"}));
    sub->add_option("--width-divisor", m.width_divisor, "width divisor for the flat stand-ins")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--freeze-tfpm-center", m.freeze_center, "treat lambda(u), c0(u) as constants in backward");
}

void add_train_options(CLI::App* sub, TrainOpts& t)
{
    sub->add_option("--manifest", t.manifest, "dataset manifest (JSON lines) (required)");
    sub->add_option("--epochs", t.epochs)->check(CLI::NonNegativeNumber);
    sub->add_option("--lr", t.lr)->check(CLI::NonNegativeNumber);
    sub->add_option("--loss", t.loss)->check(CLI::IsMember({"bce", "l2", "hinge"}));
    sub->add_option("--seed", t.seed);
    sub->add_option("--batch", t.batch)->check(CLI::PositiveNumber);
    sub->add_option("--eval-every", t.eval_every)->check(CLI::PositiveNumber);
}

vmtu::VMTUNetConfig model_config(const ModelOpts& m, const TrainOpts& t, const vmtu::Dataset& data)
{
    vmtu::VMTUNetConfig cfg;
    cfg.channels = m.channels;
    cfg.blocks = m.blocks;
    cfg.tau = m.tau;
    cfg.eps1 = m.eps1;
    cfg.eps2 = m.eps2;
    cfg.h = m.h;
    cfg.scheme = vmtu::scheme_from_string(m.scheme);
    cfg.bc = vmtu::boundary_from_string(m.bc);
    cfg.fnet = vmtu::fapprox_from_string(m.fnet);
    cfg.width_divisor = m.width_divisor;
    cfg.freeze_tfpm_center = m.freeze_center;
    cfg.seed = t.seed;
    if (!data.empty()) {
        cfg.in_channels = data.samples.front().image.channels();
        cfg.height = data.samples.front().image.height();
        cfg.width = data.samples.front().image.width();
    }
    return cfg;
}

vmtu::TrainConfig train_config(const TrainOpts& t)
{
    vmtu::TrainConfig tc;
    tc.epochs = t.epochs;
    tc.lr = t.lr;
    tc.loss = vmtu::ad::loss_from_string(t.loss);
    tc.seed = t.seed;
    tc.batch_size = t.batch;
    tc.eval_every = t.eval_every;
    tc.on_eval = [](const vmtu::HistoryRow& r) {
        std::cout << "epoch " << r.epoch << " loss " << std::setprecision(6) << r.loss << " dice " << r.dice
                  << " pixel_accuracy " << r.pixel_accuracy << std::endl;
    };
    return tc;
}

struct Splits {
    vmtu::Dataset train;
    vmtu::Dataset test;
};

Splits load_splits(const std::string& manifest_path)
{
    const vmtu::DatasetManifest m = vmtu::read_manifest(manifest_path);
    Splits s{vmtu::load_dataset(m, "train"), vmtu::load_dataset(m, "test")};
    if (s.train.empty())
        throw UsageError("manifest " + manifest_path + " has no train entries");
    return s;
}

void check_same_size(const Splits& s)
{
    const auto& ref = s.train.samples.front().image;
    for (const auto* d : {&s.train, &s.test})
        for (const auto& x : d->samples)
            if (x.image.height() != ref.height() || x.image.width() != ref.width() ||
                x.image.channels() != ref.channels())
                throw UsageError("all images in a manifest must share size and channel count");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Phase-field segmentation toolkit: classical solvers and unrolled VM_TUNet"};
    app.set_help_flag("--help", "print help and exit");
    app.set_version_flag("--version", vmtu::kVersion);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    std::string config_path;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON file of option values (flags win on conflict)");
    };

    // gen
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "synthetic spec JSON (required)");
    gen->add_option("--out", gen_out, "output directory (required)");
    add_config(gen);

    // segment-cv
    CLI::App* scv = app.add_subcommand("segment-cv", "Chan-Vese level-set segmentation");
    std::string cv_image, cv_out, cv_trace, cv_gt, cv_init = "checkerboard";
    vmtu::CVParams cvp;
    double cv_cx = -1, cv_cy = -1, cv_r = -1;
    scv->add_option("--image", cv_image, "(required)");
    scv->add_option("--out", cv_out, "mask output (.pgm or .png) (required)");
    scv->add_option("--trace", cv_trace, "trace CSV (default: <out>.trace.csv)");
    scv->add_option("--gt", cv_gt, "ground-truth mask for a dice report");
    scv->add_option("--mu", cvp.mu)->check(CLI::NonNegativeNumber);
    scv->add_option("--lambda1", cvp.lambda1)->check(CLI::PositiveNumber);
    scv->add_option("--lambda2", cvp.lambda2)->check(CLI::PositiveNumber);
    scv->add_option("--eps", cvp.eps)->check(CLI::PositiveNumber);
    scv->add_option("--dt", cvp.dt)->check(CLI::PositiveNumber);
    scv->add_option("--iters", cvp.iters)->check(CLI::PositiveNumber);
    scv->add_option("--reinit-every", cvp.reinit_every)->check(CLI::NonNegativeNumber);
    scv->add_option("--init", cv_init)->check(CLI::IsMember({"checkerboard", "circle"}));
    scv->add_option("--cx", cv_cx, "circle centre column (default: image centre)");
    scv->add_option("--cy", cv_cy, "circle centre row (default: image centre)");
    scv->add_option("--r", cv_r, "circle radius (default: quarter of the short side)");
    add_config(scv);

    // segment-ch
    CLI::App* sch = app.add_subcommand("segment-ch", "classical modified Cahn-Hilliard segmentation");
    std::string ch_image, ch_out, ch_trace, ch_gt, ch_stab, ch_scheme = "tfpm", ch_bc = "neumann", ch_init = "image";
    vmtu::CHParams chp;
    chp.M = 20;
    int ch_outer = 30;
    sch->add_option("--image", ch_image, "(required)");
    sch->add_option("--out", ch_out, "mask output (.pgm or .png) (required)");
    sch->add_option("--trace", ch_trace, "trace CSV (default: <out>.trace.csv)");
    sch->add_option("--stability", ch_stab, "per-step stability monitor CSV");
    sch->add_option("--gt", ch_gt, "ground-truth mask for a dice report");
    sch->add_option("--scheme", ch_scheme)->check(CLI::IsMember({"tfpm", "fdm"}));
    sch->add_option("--eps1", chp.eps1)->check(CLI::PositiveNumber);
    sch->add_option("--eps2", chp.eps2)->check(CLI::PositiveNumber);
    sch->add_option("--eps3", chp.eps3)->check(CLI::PositiveNumber);
    sch->add_option("--lambda1", chp.lambda1)->check(CLI::NonNegativeNumber);
    sch->add_option("--lambda2", chp.lambda2)->check(CLI::NonNegativeNumber);
    sch->add_option("--tau", chp.tau)->check(CLI::PositiveNumber);
    sch->add_option("--h", chp.h)->check(CLI::PositiveNumber);
    sch->add_option("--inner", chp.M, "inner steps per outer iteration")->check(CLI::PositiveNumber);
    sch->add_option("--outer", ch_outer, "outer iterations")->check(CLI::PositiveNumber);
    sch->add_option("--bc", ch_bc)->check(CLI::IsMember({"neumann", "periodic"}));
    sch->add_option("--init", ch_init)->check(CLI::IsMember({"image", "circle", "checkerboard"}));
    add_config(sch);

    // train
    CLI::App* tr = app.add_subcommand("train", "train VM_TUNet on a manifest");
    ModelOpts tr_model;
    TrainOpts tr_opts;
    std::string tr_ckpt, tr_history;
    add_train_options(tr, tr_opts);
    add_model_options(tr, tr_model);
    tr->add_option("--ckpt", tr_ckpt, "checkpoint output (required)");
    tr->add_option("--history", tr_history, "history CSV (default: <ckpt>.history.csv)");
    add_config(tr);

    // eval
    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ev_manifest, ev_ckpt, ev_out, ev_split = "test", ev_masks;
    ev->add_option("--manifest", ev_manifest, "(required)");
    ev->add_option("--ckpt", ev_ckpt, "(required)");
    ev->add_option("--out", ev_out, "metrics CSV (required)");
    ev->add_option("--split", ev_split, "split to evaluate (train, test or all)")
        ->check(CLI::IsMember({"train", "test", "all"}));
    ev->add_option("--masks-dir", ev_masks, "also write predicted masks here");
    add_config(ev);

    // ablate
    CLI::App* ab = app.add_subcommand("ablate", "compare F approximators or Laplacian schemes");
    ModelOpts ab_model;
    TrainOpts ab_opts;
    std::string ab_what, ab_out;
    ab->add_option("--what", ab_what, "(required)")->check(CLI::IsMember({"f-approximator", "laplacian"}));
    ab->add_option("--out", ab_out, "comparison CSV (required)");
    add_train_options(ab, ab_opts);
    add_model_options(ab, ab_model);
    add_config(ab);

    // sweep
    CLI::App* sw = app.add_subcommand("sweep", "hyperparameter sweep");
    ModelOpts sw_model;
    TrainOpts sw_opts;
    std::string sw_axis, sw_out;
    std::vector<double> sw_values;
    sw->add_option("--axis", sw_axis, "(required)")->check(CLI::IsMember({"M", "tau", "eps1", "eps2"}));
    sw->add_option("--values", sw_values, "(required)")->delimiter(',');
    sw->add_option("--out", sw_out, "sweep CSV (required)");
    add_train_options(sw, sw_opts);
    add_model_options(sw, sw_model);
    add_config(sw);

    // panel
    CLI::App* pa = app.add_subcommand("panel", "side-by-side comparison strip");
    std::vector<std::string> pa_images;
    std::vector<std::vector<std::string>> pa_masks;
    std::string pa_out;
    int pa_gap = 2;
    pa->add_option("--images", pa_images, "(required)")->delimiter(',');
    pa->add_option("--masks", pa_masks, "one comma list per mask column (repeatable)")->delimiter(',');
    pa->add_option("--out", pa_out, "(required)");
    pa->add_option("--gap", pa_gap)->check(CLI::NonNegativeNumber);
    add_config(pa);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        if (!config_path.empty())
            apply_config(sub, config_path);
        check_required(sub);

        if (sub == gen) {
            std::ifstream is(gen_spec);
            if (!is)
                throw vmtu::IoError("cannot open spec " + gen_spec);
            json j;
            try {
                j = json::parse(is);
            } catch (const json::exception& e) {
                throw UsageError("spec " + gen_spec + " is not valid JSON: " + e.what());
            }
            const vmtu::SyntheticSpec spec = vmtu::SyntheticSpec::from_json(j);
            const vmtu::DatasetManifest m = vmtu::generate(spec, gen_out);
            write_stamp(fs::path(gen_out) / "stamp.json", sub, {{"seed", spec.seed}, {"spec_hash", spec.hash()}});
            std::cout << "wrote " << m.entries.size() << " samples to " << gen_out << '\n';
        } else if (sub == scv) {
            const vmtu::ImageTensor f = vmtu::read_image(cv_image);
            vmtu::LevelSetInit init = vmtu::CheckerboardInit{};
            if (cv_init == "circle")
                init = vmtu::CircleInit{cv_cx >= 0 ? cv_cx : f.width() / 2.0, cv_cy >= 0 ? cv_cy : f.height() / 2.0,
                                        cv_r > 0 ? cv_r : std::min(f.height(), f.width()) / 4.0};
            cvp.validate();
            const vmtu::CVResult res = vmtu::chan_vese_segment(f, cvp, init);
            const vmtu::BinaryMask mask = field_mask(res.mask);
            json extra{{"iterations", cvp.iters}};
            report_dice(cv_gt, mask, extra);
            vmtu::write_mask(cv_out, mask);
            const fs::path trace = cv_trace.empty() ? with_suffix(cv_out, ".trace.csv") : fs::path(cv_trace);
            std::ofstream os(trace, std::ios::trunc);
            if (!os)
                throw vmtu::IoError("cannot open " + trace.string());
            vmtu::write_cv_trace(os, res.trace);
            write_stamp(with_suffix(cv_out, ".stamp.json"), sub, extra);
        } else if (sub == sch) {
            const vmtu::ImageTensor f = vmtu::read_image(ch_image);
            vmtu::CHOptions opt;
            opt.scheme = vmtu::scheme_from_string(ch_scheme);
            opt.bc = vmtu::boundary_from_string(ch_bc);
            opt.init = vmtu::ch_init_from_string(ch_init);
            opt.outer_iters = ch_outer;
            chp.validate();
            const vmtu::CHResult res = vmtu::ch_segment(f, chp, opt);
            const vmtu::BinaryMask mask = field_mask(res.mask);
            json extra = json::object();
            std::size_t violations = 0;
            for (const auto& s : res.stability)
                violations += s.violations();
            extra["stability_violations"] = violations;
            report_dice(ch_gt, mask, extra);
            vmtu::write_mask(ch_out, mask);
            const fs::path trace = ch_trace.empty() ? with_suffix(ch_out, ".trace.csv") : fs::path(ch_trace);
            std::ofstream os(trace, std::ios::trunc);
            if (!os)
                throw vmtu::IoError("cannot open " + trace.string());
            vmtu::write_ch_trace(os, res.trace);
            if (!ch_stab.empty()) {
                std::ofstream ss(ch_stab, std::ios::trunc);
                if (!ss)
                    throw vmtu::IoError("cannot open " + ch_stab);
                ss << std::setprecision(17) << "outer,step,norm_u,norm_lap_u,lhs,rhs,holds\n";
                for (std::size_t k = 0; k < res.stability.size(); ++k)
                    for (const auto& s : res.stability[k].steps)
                        ss << k << ',' << s.step << ',' << s.norm_u << ',' << s.norm_lap_u << ',' << s.lhs << ','
                           << s.rhs << ',' << (s.holds ? 1 : 0) << '\n';
            }
            write_stamp(with_suffix(ch_out, ".stamp.json"), sub, extra);
        } else if (sub == tr) {
            const Splits data = load_splits(tr_opts.manifest);
            check_same_size(data);
            vmtu::VMTUNetModel model(model_config(tr_model, tr_opts, data.train));
            const vmtu::TrainResult res =
                vmtu::train(model, data.train, data.test.empty() ? nullptr : &data.test, train_config(tr_opts));
            model.save(tr_ckpt);
            const fs::path hist = tr_history.empty() ? with_suffix(tr_ckpt, ".history.csv") : fs::path(tr_history);
            vmtu::write_history_csv(hist, res.history);
            write_stamp(with_suffix(tr_ckpt, ".stamp.json"), sub,
                        {{"seed", tr_opts.seed}, {"parameters", model.parameter_count()}});
            std::cout << "trained in " << std::setprecision(4) << res.seconds << " s; checkpoint " << tr_ckpt << '\n';
        } else if (sub == ev) {
            auto model = vmtu::VMTUNetModel::load(ev_ckpt);
            const vmtu::DatasetManifest m = vmtu::read_manifest(ev_manifest);
            vmtu::Dataset data = vmtu::load_dataset(m, ev_split == "all" ? "" : ev_split);
            if (data.empty())
                throw UsageError("manifest has no entries in split '" + ev_split + "'");
            std::vector<std::string> names;
            for (const auto& e : m.entries)
                if (ev_split == "all" || e.split == ev_split)
                    names.push_back(e.image);
            const vmtu::EvalRecord rec = vmtu::evaluate(*model, data);
            struct Row {
                std::string name;
                double acc, pix, dice;
            };
            std::vector<Row> rows;
            for (std::size_t i = 0; i < data.size(); ++i)
                rows.push_back({names[i], rec.accuracy[i], rec.pixel_accuracy[i], rec.dice[i]});
            rows.push_back({"mean", rec.mean_accuracy(), rec.mean_pixel_accuracy(), rec.mean_dice()});
            rows.push_back({"std", rec.std_accuracy(), rec.std_pixel_accuracy(), rec.std_dice()});
            write_csv(ev_out, "image,paper_accuracy,pixel_accuracy,dice", rows, [](std::ostream& os, const Row& r) {
                os << r.name << ',' << r.acc << ',' << r.pix << ',' << r.dice << '\n';
            });
            if (!ev_masks.empty()) {
                const auto preds = vmtu::predict_masks(*model, data);
                for (std::size_t i = 0; i < preds.size(); ++i)
                    vmtu::write_mask(fs::path(ev_masks) / ("pred_" + fs::path(names[i]).filename().string()),
                                     preds[i]);
            }
            write_stamp(with_suffix(ev_out, ".stamp.json"), sub,
                        {{"mean_dice", rec.mean_dice()}, {"empty_pairs", rec.empty_pairs}, {"loss", rec.loss}});
            std::cout << "dice " << std::setprecision(6) << rec.mean_dice() << " pixel_accuracy "
                      << rec.mean_pixel_accuracy() << " paper_accuracy " << rec.mean_accuracy() << '\n';
        } else if (sub == ab) {
            const Splits data = load_splits(ab_opts.manifest);
            check_same_size(data);
            const vmtu::Dataset* eval = data.test.empty() ? nullptr : &data.test;
            std::vector<std::pair<std::string, ModelOpts>> variants;
            if (ab_what == "f-approximator") {
                for (const char* f : {"unet", "flatcnn", "residual", "dense"}) {
                    ModelOpts m = ab_model;
                    m.fnet = f;
                    variants.emplace_back(f, m);
                }
            } else {
                for (const char* s : {"tfpm", "fdm"}) {
                    ModelOpts m = ab_model;
                    m.scheme = s;
                    variants.emplace_back(s, m);
                }
            }
            struct Row {
                std::string variant;
                vmtu::HistoryRow h;
                bool diverged;
            };
            std::vector<Row> rows;
            for (const auto& [name, m] : variants) {
                std::cout << "variant " << name << std::endl;
                try {
                    vmtu::VMTUNetModel model(model_config(m, ab_opts, data.train));
                    const auto res = vmtu::train(model, data.train, eval, train_config(ab_opts));
                    for (const auto& h : res.history)
                        rows.push_back({name, h, false});
                } catch (const vmtu::Diverged& e) {
                    std::cout << "variant " << name << " diverged: " << e.what() << std::endl;
                    rows.push_back({name, {static_cast<int>(e.step()), NAN, NAN, NAN, NAN}, true});
                }
            }
            write_csv(ab_out, "variant,epoch,loss,paper_accuracy,pixel_accuracy,dice", rows,
                      [](std::ostream& os, const Row& r) {
                          os << r.variant << ',' << r.h.epoch << ',' << r.h.loss << ',' << r.h.paper_accuracy << ','
                             << r.h.pixel_accuracy << ',' << r.h.dice << '\n';
                      });
            write_stamp(with_suffix(ab_out, ".stamp.json"), sub, {{"seed", ab_opts.seed}});
        } else if (sub == sw) {
            const Splits data = load_splits(sw_opts.manifest);
            check_same_size(data);
            const auto cells = vmtu::sweep(vmtu::sweep_axis_from_string(sw_axis), sw_values,
                                           model_config(sw_model, sw_opts, data.train), train_config(sw_opts),
                                           data.train, data.test.empty() ? nullptr : &data.test);
            vmtu::write_sweep_csv(sw_out, vmtu::sweep_axis_from_string(sw_axis), cells);
            json summary = json::array();
            for (const auto& c : cells) {
                summary.push_back({{"value", c.value}, {"diverged", c.diverged}, {"final_dice", c.final_dice()}});
                std::cout << sw_axis << "=" << c.value << (c.diverged ? " diverged" : "") << " final dice "
                          << c.final_dice() << '\n';
            }
            write_stamp(with_suffix(sw_out, ".stamp.json"), sub, {{"seed", sw_opts.seed}, {"cells", summary}});
        } else if (sub == pa) {
            std::vector<std::vector<vmtu::ImageTensor>> rows;
            for (const auto& col : pa_masks)
                if (col.size() != pa_images.size())
                    throw UsageError("every --masks list needs one mask per image");
            for (std::size_t i = 0; i < pa_images.size(); ++i) {
                std::vector<vmtu::ImageTensor> row{vmtu::read_image(pa_images[i])};
                for (const auto& col : pa_masks)
                    row.push_back(vmtu::mask_to_image(vmtu::read_mask(col[i])));
                rows.push_back(std::move(row));
            }
            vmtu::write_image(pa_out, vmtu::compose_panel(rows, pa_gap));
            write_stamp(with_suffix(pa_out, ".stamp.json"), sub);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const vmtu::InvalidArgument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const vmtu::ShapeMismatch& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const vmtu::InputTooSmall& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const vmtu::Diverged& e) {
        std::cerr << "diverged at step " << e.step() << ": " << e.what() << '\n';
        return kDiverged;
    } catch (const vmtu::EmptyRegion& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kDiverged;
    } catch (const vmtu::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const vmtu::DecodeError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}
