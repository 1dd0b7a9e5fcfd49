#include "weathergs/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "weathergs/error.hpp"
#include "weathergs/image_io.hpp"
#include "weathergs/losses.hpp"
#include "weathergs/renderer.hpp"

namespace wgs {

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    require(a.same_size(b), ErrorCode::DimensionMismatch, "psnr: image size mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.pixel_count(); ++i) {
        const Vec3 d = a.pixels[i] - b.pixels[i];
        mse += d.x * d.x + d.y * d.y + d.z * d.z;
    }
    mse /= 3.0 * static_cast<double>(a.pixel_count());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

EvalReport evaluate(const DatasetManifest& manifest, const GaussianCloud& cloud,
                    const Vec3& background) {
    EvalReport report;
    report.scene_name = manifest.scene_name;
    report.config_hash = manifest.config_hash;

    RenderOptions opt;
    opt.background = background;

    for (size_t i = 0; i < manifest.views.size(); ++i) {
        const ViewRecord& view = manifest.views[i];
        if (view.split != Split::Test) continue;
        require(!view.clean_path.empty(), ErrorCode::Validation,
                "evaluate: test view has no clean reference");
        const ImageBuffer clean = load_image(view.clean_path);
        const ImageBuffer rendered = render(cloud, view.camera, opt);
        EvalRow row;
        row.view_id = i;
        row.psnr_db = psnr(rendered, clean);
        row.ssim = ssim(rendered, clean);
        report.rows.push_back(row);
    }
    require(!report.rows.empty(), ErrorCode::Validation, "evaluate: manifest has no test views");

    double ps = 0, ss = 0;
    for (const auto& r : report.rows) {
        ps += r.psnr_db;
        ss += r.ssim;
    }
    report.avg_psnr = ps / static_cast<double>(report.rows.size());
    report.avg_ssim = ss / static_cast<double>(report.rows.size());
    return report;
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "write_report_csv: cannot open " + path);
    out << "# scene=" << report.scene_name << " config_hash=" << report.config_hash
        << " checkpoint=" << report.checkpoint_path << "\n";
    out << "view_id,psnr_db,ssim,lpips\n";
    char line[128];
    for (const auto& r : report.rows) {
        std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,n/a\n", r.view_id, r.psnr_db, r.ssim);
        out << line;
    }
    std::snprintf(line, sizeof(line), "average,%.6f,%.6f,n/a\n", report.avg_psnr, report.avg_ssim);
    out << line;
}

std::string report_table(const EvalReport& report) {
    std::ostringstream os;
    char line[128];
    os << "view      PSNR(dB)     SSIM    LPIPS\n";
    for (const auto& r : report.rows) {
        std::snprintf(line, sizeof(line), "%-8zu %9.3f %8.4f      n/a\n", r.view_id, r.psnr_db,
                      r.ssim);
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-8s %9.3f %8.4f      n/a\n", "average", report.avg_psnr,
                  report.avg_ssim);
    os << line;
    return os.str();
}

ComparisonTable compare_runs(const std::vector<EvalReport>& reports) {
    require(!reports.empty(), ErrorCode::Validation, "compare_runs: no reports");
    ComparisonTable table;
    for (const auto& r : reports) {
        table.labels.push_back(r.label.empty() ? r.scene_name : r.label);
        table.psnr_values.push_back(r.avg_psnr);
        table.ssim_values.push_back(r.avg_ssim);
    }
    for (size_t i = 1; i < reports.size(); ++i) {
        if (table.psnr_values[i] > table.psnr_values[table.best_psnr_index])
            table.best_psnr_index = i;
        if (table.ssim_values[i] > table.ssim_values[table.best_ssim_index])
            table.best_ssim_index = i;
    }

    std::ostringstream os;
    char line[192];
    os << "run                      PSNR(dB)   dPSNR     SSIM    dSSIM    LPIPS\n";
    for (size_t i = 0; i < reports.size(); ++i) {
        const double dp = table.psnr_values[i] - table.psnr_values[0];
        const double ds = table.ssim_values[i] - table.ssim_values[0];
        std::snprintf(line, sizeof(line), "%-22s %9.3f%s %+8.3f %8.4f%s %+8.4f      n/a\n",
                      table.labels[i].c_str(), table.psnr_values[i],
                      i == table.best_psnr_index ? "*" : " ", dp, table.ssim_values[i],
                      i == table.best_ssim_index ? "*" : " ", ds);
        os << line;
    }
    os << "(* best per column; deltas vs first row)\n";
    table.text = os.str();
    return table;
}

}  // namespace wgs
