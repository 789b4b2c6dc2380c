// Stand-in external detector: flags every row with STUB_FLAG, or exits 1 when STUB_FLAG < 0.
#include <fstream>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    if (argc != 4) {
        std::cerr << "usage: " << argv[0] << " <merged.csv> <out_dir> <run_id>\n";
        return 2;
    }
    if (STUB_FLAG < 0) return 1;
    std::ifstream in(argv[1]);
    std::string line;
    std::getline(in, line);
    std::ofstream out(std::string(argv[2]) + "/" + argv[3] + ".flags");
    while (std::getline(in, line)) {
        if (!line.empty()) out << STUB_FLAG << '\n';
    }
    return out ? 0 : 1;
}
