from setuptools import setup


VERSION = '0.1.0'


if __name__ == '__main__':
    with open("README.md", 'r') as readme:
        long_description = readme.read()

    setup(
        name='synprint',
        version=VERSION,
        packages=[
            'synprint',
            'synprint.core',
            'synprint.codes',
            'synprint.farm',
            'synprint.fingerprint',
            'synprint.experiments',
            'synprint.library',
        ],
        license='Apache-2.0',
        entry_points={
            'console_scripts': [
                'synprint = synprint.core.control:main',
            ]},
        description=(
            'Fingerprint simulated quantum backends from the error '
            'syndromes of quantum error-correction circuits.'
        ),
        long_description=long_description,
        long_description_content_type='text/markdown',
        package_data={},
        include_package_data=True,
        python_requires='>=3.9, <3.12',
        install_requires=[
            'networkx>=2.6.3',
            'numpy>=1.22.1',
            'Pint>=0.18',
            'scipy>=1.7.3',
            'pytest>=6.2.5',
            'orjson>=3.8.0'
        ],
        classifiers=[
            'Development Status :: 3 - Alpha',
            'Intended Audience :: Science/Research',
            'License :: OSI Approved :: Apache Software License',
            'Operating System :: OS Independent',
            'Programming Language :: Python',
            'Programming Language :: Python :: 3',
            'Programming Language :: Python :: 3.9',
            'Programming Language :: Python :: 3.10',
            'Programming Language :: Python :: 3.11',
            'Topic :: Scientific/Engineering :: Physics',
        ],
        keywords='quantum error-correction syndrome fingerprinting stabilizer simulation',
    )
