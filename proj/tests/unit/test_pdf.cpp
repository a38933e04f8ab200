#include <gtest/gtest.h>

#include <sstream>
#include <zlib.h>

#include "bularag/error.hpp"
#include "bularag/ingest.hpp"
#include "bularag/pdf.hpp"
#include "test_support.hpp"

using namespace bularag;

namespace {

std::string deflate(const std::string& in) {
    uLongf len = compressBound(static_cast<uLong>(in.size()));
    std::string out(len, '\0');
    compress(reinterpret_cast<Bytef*>(out.data()), &len, reinterpret_cast<const Bytef*>(in.data()),
             static_cast<uLong>(in.size()));
    out.resize(len);
    return out;
}

struct PageContent {
    std::string stream;
    bool compressed;
};

// Minimal PDF: catalog, page tree, one content stream per page.
std::string build_pdf(const std::vector<PageContent>& pages) {
    std::ostringstream pdf;
    pdf << "%PDF-1.4\n";
    const int first_page = 3;
    pdf << "1 0 obj\n<< /Type /Catalog /Pages 2 0 R >>\nendobj\n";
    pdf << "2 0 obj\n<< /Type /Pages /Kids [";
    for (std::size_t i = 0; i < pages.size(); ++i) pdf << first_page + 2 * i << " 0 R ";
    pdf << "] /Count " << pages.size() << " >>\nendobj\n";
    for (std::size_t i = 0; i < pages.size(); ++i) {
        const int page_obj = first_page + 2 * static_cast<int>(i);
        pdf << page_obj << " 0 obj\n<< /Type /Page /Parent 2 0 R /Contents " << page_obj + 1 << " 0 R >>\nendobj\n";
        const std::string data = pages[i].compressed ? deflate(pages[i].stream) : pages[i].stream;
        pdf << page_obj + 1 << " 0 obj\n<< /Length " << data.size()
            << (pages[i].compressed ? " /Filter /FlateDecode" : "") << " >>\nstream\n"
            << data << "\nendstream\nendobj\n";
    }
    pdf << "trailer\n<< /Root 1 0 R >>\n%%EOF\n";
    return pdf.str();
}

}  // namespace

TEST(Pdf, ExtractsTextFromCompressedAndPlainPages) {
    const auto pdf = build_pdf({
        {"BT /F1 14 Tf 72 720 Td (PARACETAMOL) Tj 0 -20 Td (Comprimidos de 750 mg) Tj ET", true},
        {"BT 72 720 Td [(Dose ) -250 (para adultos)] TJ T* (segunda linha) Tj ET", false},
    });
    const auto pages = extract_pdf_pages(pdf);
    ASSERT_EQ(pages.size(), 2u);
    EXPECT_NE(pages[0].find("PARACETAMOL"), std::string::npos);
    EXPECT_NE(pages[0].find("Comprimidos de 750 mg"), std::string::npos);
    EXPECT_NE(pages[1].find("Dose"), std::string::npos);
    EXPECT_NE(pages[1].find("segunda linha"), std::string::npos);
}

TEST(Pdf, DecodesWinAnsiAndEscapes) {
    // \343 is 'ã' in WinAnsi; \( is a literal parenthesis.
    const auto pdf = build_pdf({{"BT (Gesta\\347\\343o \\(uso\\)) Tj ET", true}});
    const auto pages = extract_pdf_pages(pdf);
    ASSERT_EQ(pages.size(), 1u);
    EXPECT_NE(pages[0].find("Gestação (uso)"), std::string::npos) << pages[0];
}

TEST(Pdf, RejectsNonPdfBytes) {
    try {
        (void)extract_pdf_pages("plain text, not a pdf");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnreadableFile);
    }
}

TEST(Pdf, ImageOnlyPdfIsEmptyDocument) {
    const auto bytes = build_pdf({{"q 100 0 0 100 0 0 cm /Im1 Do Q", true}});
    std::istringstream in(bytes);
    try {
        (void)extract_document(in, DocumentKind::Pdf, "scan.pdf");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyDocument);
    }
}

TEST(Pdf, MixedCorpusDirectory) {
    testsupport::TempDir dir;
    testsupport::write_file(dir / "a_amoxicilina.pdf",
                            build_pdf({{"BT (AMOXICILINA) Tj 0 -14 Td (500 mg a cada 8 horas) Tj ET", true}}));
    testsupport::write_file(dir / "b_paracetamol.txt", "PARACETAMOL\nComprimidos\n");
    const auto corpus = ingest_corpus(dir.path());
    ASSERT_EQ(corpus.documents.size(), 2u);
    EXPECT_EQ(corpus.documents[0].medicine_name, "AMOXICILINA");
    EXPECT_EQ(corpus.documents[1].medicine_name, "PARACETAMOL");
    EXPECT_EQ(corpus.passages[0].source, "a_amoxicilina.pdf");
}
