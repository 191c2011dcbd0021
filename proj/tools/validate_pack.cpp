#include <iostream>
#include <string_view>
#include <variant>

#include "geoquiz/content.hpp"
#include "geoquiz/xml.hpp"

int main(int argc, char** argv) {
    const std::string_view arg = argc == 2 ? argv[1] : "";
    if (argc != 2 || arg == "-h" || arg == "--help") {
        std::cerr << "usage: validate-pack <pack-dir>\n"
                     "exit 0 valid, 1 violations listed, 2 unreadable or malformed\n";
        return argc == 2 ? 0 : 2;
    }
    try {
        const auto result = geoquiz::content::parse_content_pack(geoquiz::content::read_pack_directory(argv[1]));
        if (const auto* report = std::get_if<geoquiz::content::ValidationReport>(&result)) {
            std::cout << report->to_string();
            std::cout << report->entries.size() << " violation(s)\n";
            return 1;
        }
        const auto& pack = std::get<geoquiz::content::ContentPack>(result);
        std::cout << "ok: " << pack.pois.size() << " POIs, " << pack.settings.topics.size() << " topics, "
                  << pack.messages.quizzes.size() << " questionnaires, " << pack.parking_spots.size()
                  << " parking spots\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
